"""HTTP synthesis gateway: text in, crowd-flavored WAV out.

The request pipeline is fixed: normalize -> vowelize (degrading to
passthrough if the vowelizer is down) -> backend synthesis -> crowd-noise
mixing -> 22050 Hz PCM16 WAV. Noise is mixed here in the gateway rather
than assumed inside the TTS model, so the output keeps its acoustic
environment no matter which backend is plugged in; --no-noise disables
the mix for backends that already bake it in.

Response metadata travels in headers; X-Vowelized-Text is percent-encoded
UTF-8 because raw Arabic is not representable in HTTP header values.
"""

# No postponed annotations here: the request model is defined inside
# create_app and string annotations would not resolve for the framework.

import io
import math
import threading
import urllib.parse
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import httpx
import numpy as np

from . import audio
from .audio import CANONICAL_RATE, AudioBuffer
from .corpus import EmotionLabel
from .errors import FoocttsError
from .textproc import VowelizerClient, VowelizerConfig, VowelizerError, normalize

MAX_TEXT_CHARS = 2000

BASE_F0 = {
    None: 120.0,
    EmotionLabel.NEUTRAL: 120.0,
    EmotionLabel.EXCITED: 180.0,
    EmotionLabel.VERY_EXCITED: 240.0,
}


class BackendUnavailable(FoocttsError):
    pass


class BadBackendAudio(FoocttsError):
    pass


class InvalidRequest(FoocttsError):
    pass


class ConfigError(FoocttsError):
    pass


@dataclass
class StubConfig:
    char_duration_ms: float = 90.0
    fade_ms: float = 10.0
    amplitude: float = 0.3
    base_f0: dict = field(default_factory=lambda: dict(BASE_F0))

    def __post_init__(self):
        if self.char_duration_ms <= 0:
            raise ValueError("char_duration_ms must be positive")


def _char_pitch_factor(ch: str) -> float:
    # crc32 rather than hash(): stable across processes, so identical
    # requests give bit-identical audio in any worker.
    return 1.0 + (zlib.crc32(ch.encode("utf-8")) % 12) / 24.0


def stub_synthesize(
    text: str, emotion: Optional[EmotionLabel] = None, cfg: Optional[StubConfig] = None
) -> AudioBuffer:
    """Deterministic tone-sequence stand-in for a neural synthesizer.

    Every non-space character becomes one fixed-length tone whose
    frequency is the emotion's base F0 scaled by a per-character factor;
    spaces become silence of the same length. Edges get a raised-cosine
    fade so concatenation does not click.
    """
    if not text:
        raise InvalidRequest("cannot synthesize empty text")
    cfg = cfg or StubConfig()
    rate = CANONICAL_RATE
    seg_len = int(round(cfg.char_duration_ms * rate / 1000.0))
    fade_len = min(int(round(cfg.fade_ms * rate / 1000.0)), seg_len // 2)
    envelope = np.ones(seg_len)
    if fade_len > 0:
        ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(fade_len) / fade_len)
        envelope[:fade_len] = ramp
        envelope[-fade_len:] = ramp[::-1]
    base = cfg.base_f0[emotion]
    t = np.arange(seg_len) / rate

    pieces = []
    for ch in text:
        if ch.isspace():
            pieces.append(np.zeros(seg_len))
        else:
            freq = base * _char_pitch_factor(ch)
            pieces.append(cfg.amplitude * envelope * np.sin(2.0 * np.pi * freq * t))
    return AudioBuffer(samples=np.concatenate(pieces), sample_rate=rate)


class StubBackend:
    name = "stub"

    def __init__(self, cfg: Optional[StubConfig] = None):
        self.cfg = cfg or StubConfig()

    def synthesize(self, text: str, emotion: Optional[EmotionLabel]) -> AudioBuffer:
        return stub_synthesize(text, emotion, self.cfg)


class RemoteBackend:
    """Forwards synthesis to an external HTTP TTS service.

    Contract: POST JSON {"text": ..., "emotion": ...} and receive WAV
    bytes; whatever rate the service produces is resampled to 22050 Hz.
    """

    name = "remote"

    def __init__(self, endpoint: str, timeout_ms: int = 10000,
                 transport: Optional[httpx.BaseTransport] = None):
        self.endpoint = endpoint
        self._client = httpx.Client(timeout=timeout_ms / 1000.0, transport=transport)

    def synthesize(self, text: str, emotion: Optional[EmotionLabel]) -> AudioBuffer:
        payload = {"text": text, "emotion": emotion.value if emotion else None}
        try:
            resp = self._client.post(self.endpoint, json=payload)
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"TTS backend unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise BackendUnavailable(f"TTS backend returned HTTP {resp.status_code}")
        try:
            buf = audio.read_wav(io.BytesIO(resp.content))
        except FoocttsError as exc:
            raise BadBackendAudio(f"backend did not return decodable WAV: {exc}") from exc
        if len(buf) == 0:
            raise BadBackendAudio("backend returned empty audio")
        return audio.resample(buf, CANONICAL_RATE)


@dataclass
class GatewayConfig:
    backend: str = "stub"
    host: str = "127.0.0.1"
    port: int = 8080
    stub: StubConfig = field(default_factory=StubConfig)
    remote_endpoint: Optional[str] = None
    remote_timeout_ms: int = 10000
    noise_path: Optional[str] = None
    snr_db: float = 15.0
    no_noise: bool = False
    static_dir: Optional[str] = None

    def __post_init__(self):
        if self.backend not in ("stub", "remote"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.backend == "remote" and not self.remote_endpoint:
            raise ConfigError("remote backend needs an endpoint")
        if self.remote_timeout_ms <= 0:
            raise ConfigError("remote_timeout_ms must be positive")


class SynthesisService:
    """The backend-agnostic pipeline behind the HTTP surface."""

    def __init__(
        self,
        cfg: GatewayConfig,
        vowelizer_cfg: Optional[VowelizerConfig] = None,
        vowelizer_transport: Optional[httpx.BaseTransport] = None,
        backend_transport: Optional[httpx.BaseTransport] = None,
    ):
        self.cfg = cfg
        self.vowelizer = VowelizerClient(
            vowelizer_cfg or VowelizerConfig(), transport=vowelizer_transport
        )
        self.backends = {"stub": StubBackend(cfg.stub)}
        if cfg.remote_endpoint:
            self.backends["remote"] = RemoteBackend(
                cfg.remote_endpoint, cfg.remote_timeout_ms, transport=backend_transport
            )
        self.noise: Optional[AudioBuffer] = None
        if cfg.noise_path:
            noise = audio.read_wav(cfg.noise_path)
            self.noise = audio.resample(noise, CANONICAL_RATE)
        self.metrics = {"requests": 0, "vowelizer_failures": 0, "backend_failures": 0}
        self._metrics_lock = threading.Lock()

    def _bump(self, key: str) -> None:
        with self._metrics_lock:
            self.metrics[key] += 1

    def synthesize(
        self,
        text: str,
        emotion: Optional[EmotionLabel] = None,
        snr_db: Optional[float] = None,
        no_noise: bool = False,
        backend_name: Optional[str] = None,
    ) -> tuple[bytes, dict]:
        """Run the full pipeline; returns (wav_bytes, metadata)."""
        self._bump("requests")
        if len(text) > MAX_TEXT_CHARS:
            raise InvalidRequest(f"text exceeds {MAX_TEXT_CHARS} characters")
        cleaned = normalize(text)
        if not cleaned:
            raise InvalidRequest("text is empty after normalization")

        vowelized_ok = False
        try:
            vowelized = self.vowelizer.vowelize(cleaned)
            vowelized_ok = self.vowelizer.cfg.mode == "remote"
        except VowelizerError as exc:
            self._bump("vowelizer_failures")
            vowelized = exc.text  # degrade to passthrough, never fail the request

        name = backend_name or self.cfg.backend
        backend = self.backends.get(name)
        if backend is None:
            raise InvalidRequest(f"unknown backend {name!r}")
        try:
            speech = backend.synthesize(vowelized, emotion)
        except (BackendUnavailable, BadBackendAudio):
            self._bump("backend_failures")
            raise

        applied_snr: Optional[float] = None
        if not (no_noise or self.cfg.no_noise) and self.noise is not None:
            snr = self.cfg.snr_db if snr_db is None else snr_db
            if not (math.isinf(snr) and snr > 0):
                speech = audio.mix_noise(speech, self.noise, snr)
                applied_snr = snr

        meta = {
            "vowelized_text": vowelized,
            "vowelized": vowelized_ok,
            "backend": name,
            "duration_s": speech.duration_s,
            "snr_db": applied_snr,
        }
        return audio.wav_bytes(speech), meta

    def effective_config(self) -> dict:
        """Config echo for /config; filesystem details are redacted."""
        return {
            "backend": self.cfg.backend,
            "backends_available": sorted(self.backends),
            "noise": Path(self.cfg.noise_path).name if self.cfg.noise_path else None,
            "snr_db": self.cfg.snr_db,
            "no_noise": self.cfg.no_noise,
            "vowelizer_mode": self.vowelizer.cfg.mode,
            "sample_rate": CANONICAL_RATE,
        }


_PLACEHOLDER_PAGE = """<!doctype html>
<html lang="ar" dir="rtl"><head><meta charset="utf-8">
<title>FOOCTTS</title></head>
<body><h1>FOOCTTS gateway</h1>
<p>The gateway is running. POST /v1/synthesize to generate audio, or build
the web front-end to use this page interactively.</p></body></html>
"""

_EMOTIONS = {lab.value: lab for lab in EmotionLabel}


def create_app(
    cfg: Optional[GatewayConfig] = None,
    vowelizer_cfg: Optional[VowelizerConfig] = None,
    vowelizer_transport: Optional[httpx.BaseTransport] = None,
    backend_transport: Optional[httpx.BaseTransport] = None,
):
    """Build the FastAPI app: /v1/synthesize, /health, /config, and /."""
    from fastapi import FastAPI, Request
    from fastapi.exceptions import RequestValidationError
    from fastapi.responses import HTMLResponse, JSONResponse, Response
    from pydantic import BaseModel

    service = SynthesisService(
        cfg or GatewayConfig(),
        vowelizer_cfg,
        vowelizer_transport=vowelizer_transport,
        backend_transport=backend_transport,
    )
    app = FastAPI(title="fooctts", docs_url=None, redoc_url=None)
    app.state.service = service

    class SynthesisBody(BaseModel):
        text: str
        emotion: Optional[str] = None
        snr_db: Optional[float] = None
        no_noise: bool = False
        backend: Optional[str] = None

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "malformed request body"})

    def _synthesize(body: SynthesisBody) -> Response:
        if body.emotion is not None and body.emotion not in _EMOTIONS:
            return JSONResponse(
                status_code=400,
                content={"error": f"emotion must be one of {sorted(_EMOTIONS)}"},
            )
        try:
            wav, meta = service.synthesize(
                body.text,
                emotion=_EMOTIONS.get(body.emotion),
                snr_db=body.snr_db,
                no_noise=body.no_noise,
                backend_name=body.backend,
            )
        except InvalidRequest as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        except (BackendUnavailable, BadBackendAudio) as exc:
            return JSONResponse(status_code=502, content={"error": str(exc)})
        headers = {
            "X-Vowelized-Text": urllib.parse.quote(meta["vowelized_text"]),
            "X-Vowelized": "true" if meta["vowelized"] else "false",
            "X-Backend": meta["backend"],
            "X-Duration-S": f"{meta['duration_s']:.3f}",
            "X-Snr-Db": "inf" if meta["snr_db"] is None else f"{meta['snr_db']:g}",
        }
        return Response(content=wav, media_type="audio/wav", headers=headers)

    @app.post("/v1/synthesize")
    def synthesize_v1(body: SynthesisBody) -> Response:
        return _synthesize(body)

    @app.post("/synthesize")
    def synthesize_unversioned(body: SynthesisBody) -> Response:
        return _synthesize(body)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/config")
    def config() -> dict:
        return service.effective_config()

    def _static_dir() -> Optional[Path]:
        if service.cfg.static_dir:
            return Path(service.cfg.static_dir)
        packaged = Path(__file__).parent / "static"
        return packaged if packaged.exists() else None

    @app.get("/")
    def index() -> HTMLResponse:
        static = _static_dir()
        if static is not None and (static / "index.html").exists():
            return HTMLResponse((static / "index.html").read_text(encoding="utf-8"))
        return HTMLResponse(_PLACEHOLDER_PAGE)

    _MEDIA_TYPES = {".js": "application/javascript", ".css": "text/css",
                    ".html": "text/html", ".map": "application/json"}

    @app.get("/static/{name}")
    def static_file(name: str) -> Response:
        static = _static_dir()
        target = (static / name) if static is not None else None
        if target is None or "/" in name or ".." in name or not target.is_file():
            return JSONResponse(status_code=404, content={"error": "not found"})
        media = _MEDIA_TYPES.get(target.suffix, "application/octet-stream")
        return Response(content=target.read_bytes(), media_type=media)

    return app
