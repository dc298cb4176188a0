"""Mono PCM audio: WAV I/O, resampling, and SNR-controlled noise mixing.

All signal processing in this package operates on AudioBuffer values:
immutable float64 sample arrays in [-1, 1] plus a sample rate. WAV files
are parsed directly (RIFF little-endian) so that format errors surface as
the precise exceptions below instead of whatever a third-party decoder
happens to raise; only 16-bit PCM and 32-bit IEEE float inputs are
accepted, and output is always 16-bit PCM mono.
"""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from .errors import FoocttsError

# Corpus-wide target rate for extraction and synthesis output.
CANONICAL_RATE = 22050

_INT16_FULL_SCALE = 32767.0


class UnsupportedFormat(FoocttsError):
    """WAV compression code or sample layout we do not decode."""


class CorruptHeader(FoocttsError):
    """File is not a parseable RIFF/WAVE container."""


class SampleRateMismatch(FoocttsError):
    pass


class SilentNoiseSource(FoocttsError):
    pass


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Immutable mono audio: samples in [-1, 1] and a positive sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional (mono)")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        samples = samples.copy()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


PathOrFile = Union[str, Path, BinaryIO]


def _read_bytes(source: PathOrFile) -> bytes:
    if isinstance(source, (str, Path)):
        return Path(source).read_bytes()
    return source.read()


def _parse_chunks(data: bytes) -> dict:
    """Walk RIFF chunks, returning the fmt fields and the data payload."""
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise CorruptHeader("not a RIFF/WAVE file")
    pos = 12
    fmt = None
    payload = None
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body_start = pos + 8
        if body_start + size > len(data):
            raise CorruptHeader(f"chunk {chunk_id!r} extends past end of file")
        body = data[body_start : body_start + size]
        if chunk_id == b"fmt ":
            if size < 16:
                raise CorruptHeader("fmt chunk too small")
            code, channels, rate, _byte_rate, _block_align, bits = struct.unpack_from(
                "<HHIIHH", body, 0
            )
            fmt = {"code": code, "channels": channels, "rate": rate, "bits": bits}
        elif chunk_id == b"data":
            payload = body
        pos = body_start + size + (size & 1)  # chunks are word-aligned
    if fmt is None:
        raise CorruptHeader("missing fmt chunk")
    if payload is None:
        raise CorruptHeader("missing data chunk")
    fmt["payload"] = payload
    return fmt


def read_wav(source: PathOrFile) -> AudioBuffer:
    """Load a WAV file as a mono AudioBuffer scaled to [-1, 1].

    Accepts 16-bit PCM (format 1) and 32-bit IEEE float (format 3) with one
    or two channels; stereo is downmixed by averaging. Raises
    UnsupportedFormat for anything else, CorruptHeader for broken
    containers, and OSError for I/O failures.
    """
    fmt = _parse_chunks(_read_bytes(source))
    code, channels, rate, bits = fmt["code"], fmt["channels"], fmt["rate"], fmt["bits"]
    if code not in (1, 3):
        raise UnsupportedFormat(f"compression code {code} not supported (PCM16/float32 only)")
    if channels not in (1, 2):
        raise UnsupportedFormat(f"{channels} channels not supported (mono/stereo only)")
    if rate <= 0:
        raise CorruptHeader("sample rate must be positive")
    payload = fmt["payload"]
    if code == 1:
        if bits != 16:
            raise UnsupportedFormat(f"{bits}-bit PCM not supported (16-bit only)")
        raw = np.frombuffer(payload[: len(payload) - (len(payload) % 2)], dtype="<i2")
        samples = raw.astype(np.float64) / _INT16_FULL_SCALE
    else:
        if bits != 32:
            raise UnsupportedFormat(f"{bits}-bit float not supported (32-bit only)")
        raw = np.frombuffer(payload[: len(payload) - (len(payload) % 4)], dtype="<f4")
        samples = raw.astype(np.float64)
    if channels == 2:
        samples = samples[: (samples.size // 2) * 2].reshape(-1, 2).mean(axis=1)
    samples = np.clip(samples, -1.0, 1.0)
    return AudioBuffer(samples=samples, sample_rate=int(rate))


def wav_info(path: Union[str, Path]) -> tuple[int, int]:
    """Return (n_samples, sample_rate) for a WAV file without keeping the data."""
    buf = read_wav(path)
    return len(buf), buf.sample_rate


def write_wav(buffer: AudioBuffer, dest: PathOrFile) -> None:
    """Write a mono 16-bit PCM little-endian WAV file.

    Samples are clamped to [-1, 1] before quantization; a read-back differs
    from the input by at most one quantization step (1/32767).
    """
    clamped = np.clip(buffer.samples, -1.0, 1.0)
    pcm = np.round(clamped * _INT16_FULL_SCALE).astype("<i2")
    payload = pcm.tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH",
        16,  # fmt chunk size
        1,  # PCM
        1,  # mono
        buffer.sample_rate,
        buffer.sample_rate * 2,  # byte rate
        2,  # block align
        16,  # bits per sample
    )
    header += b"data" + struct.pack("<I", len(payload))
    if isinstance(dest, (str, Path)):
        Path(dest).write_bytes(header + payload)
    else:
        dest.write(header + payload)


def wav_bytes(buffer: AudioBuffer) -> bytes:
    """Serialize to WAV bytes in memory (PCM16 mono)."""
    out = io.BytesIO()
    write_wav(buffer, out)
    return out.getvalue()


def resample(buffer: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Linear-interpolation resampling to target_rate.

    Output length is round(n * target/source), so duration is preserved to
    within one output sample period. Linear interpolation is adequate for
    corpus preparation; it is not anti-aliased, so strong content above the
    target Nyquist will fold.
    """
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if target_rate == buffer.sample_rate:
        return buffer
    n = len(buffer)
    n_out = int(round(n * target_rate / buffer.sample_rate))
    if n == 0 or n_out == 0:
        return AudioBuffer(samples=np.zeros(0), sample_rate=target_rate)
    positions = np.arange(n_out) * (buffer.sample_rate / target_rate)
    out = np.interp(positions, np.arange(n), buffer.samples)
    return AudioBuffer(samples=out, sample_rate=target_rate)


def mix_noise(speech: AudioBuffer, noise: AudioBuffer, snr_db: float) -> AudioBuffer:
    """Mix background noise under speech at a requested speech-to-noise ratio.

    The noise is looped or truncated to the speech length, then scaled so
    that 10*log10(P_speech / P_noise) equals snr_db before summation. The
    sum is rescaled to peak 0.99 only when it exceeds full scale (which
    leaves the component ratio untouched). snr_db = +inf is the no-noise
    sentinel and returns the speech unchanged.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return speech
    if speech.sample_rate != noise.sample_rate:
        raise SampleRateMismatch(
            f"speech at {speech.sample_rate} Hz but noise at {noise.sample_rate} Hz"
        )
    if len(speech) == 0:
        return speech
    if len(noise) == 0:
        raise SilentNoiseSource("noise buffer is empty")
    reps = -(-len(speech) // len(noise))
    tiled = np.tile(noise.samples, reps)[: len(speech)]
    p_speech = float(np.mean(np.square(speech.samples)))
    p_noise = float(np.mean(np.square(tiled)))
    if p_noise < 1e-14:
        raise SilentNoiseSource("noise source is silent; cannot reach a finite SNR")
    scale = math.sqrt(p_speech / (p_noise * 10.0 ** (snr_db / 10.0)))
    mixed = speech.samples + scale * tiled
    peak = float(np.max(np.abs(mixed))) if mixed.size else 0.0
    if peak > 1.0:
        mixed = mixed * (0.99 / peak)
    return AudioBuffer(samples=mixed, sample_rate=speech.sample_rate)
