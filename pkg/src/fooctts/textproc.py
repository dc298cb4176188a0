"""Transcript text handling: normalization, script tokenization,
Latin-to-Arabic transliteration, and the vowelizer client.

Raw and vowelized text are kept separate throughout the pipeline; the
vowelizer only ever adds combining diacritics, so stripping them must
give back the undiacritized input.
"""

from __future__ import annotations

import enum
import json
import logging
import re
import threading
from collections import OrderedDict
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import httpx

from .errors import FoocttsError

log = logging.getLogger(__name__)

TATWEEL = "ـ"
# Short vowels and related combining marks (fathatan .. sukun).
DIACRITICS_RE = re.compile("[ً-ْ]")

_ARABIC_RANGES = (
    (0x0600, 0x06FF),  # Arabic
    (0xFB50, 0xFDFF),  # presentation forms A
    (0xFE70, 0xFEFF),  # presentation forms B
)
_PUNCT = set("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~") | set("،؛؟«»")


class NotLatinToken(FoocttsError):
    pass


class VowelizerError(FoocttsError):
    """Base for vowelizer failures; carries the text so callers can degrade."""

    def __init__(self, message: str, text: str):
        super().__init__(message)
        self.text = text


class VowelizerTimeout(VowelizerError):
    """Request timed out or the endpoint was unreachable."""


class VowelizerHttpError(VowelizerError):
    def __init__(self, status: int, text: str):
        super().__init__(f"vowelizer returned HTTP {status}", text)
        self.status = status


class Script(enum.Enum):
    ARABIC = "arabic"
    LATIN = "latin"
    DIGIT = "digit"
    PUNCT = "punct"
    OTHER = "other"


@dataclass(frozen=True)
class Token:
    text: str
    script: Script
    start: int  # byte offset in the UTF-8 source
    end: int


def classify_char(ch: str) -> Script:
    cp = ord(ch)
    if any(lo <= cp <= hi for lo, hi in _ARABIC_RANGES):
        return Script.ARABIC
    if ("a" <= ch <= "z") or ("A" <= ch <= "Z"):
        return Script.LATIN
    if "0" <= ch <= "9":
        return Script.DIGIT
    if ch in _PUNCT:
        return Script.PUNCT
    return Script.OTHER


def tokenize(text: str) -> list[Token]:
    """Split into maximal same-script runs; whitespace delimits.

    Token byte spans index into the UTF-8 encoding of the input, so the
    original string can be reassembled around them.
    """
    tokens = []
    run: list[str] = []
    run_script = None
    run_start = 0
    byte_pos = 0
    for ch in text:
        ch_bytes = len(ch.encode("utf-8"))
        if ch.isspace():
            if run:
                tokens.append(Token("".join(run), run_script, run_start, byte_pos))
                run = []
            run_script = None
        else:
            script = classify_char(ch)
            if script is not run_script:
                if run:
                    tokens.append(Token("".join(run), run_script, run_start, byte_pos))
                run = []
                run_script = script
                run_start = byte_pos
            run.append(ch)
        byte_pos += ch_bytes
    if run:
        tokens.append(Token("".join(run), run_script, run_start, byte_pos))
    return tokens


def normalize(text: str) -> str:
    """Drop tatweel, collapse whitespace runs to single spaces, trim."""
    return re.sub(r"\s+", " ", text.replace(TATWEEL, "")).strip()


def strip_diacritics(text: str) -> str:
    return DIACRITICS_RE.sub("", text)


def load_translit_table(path: Optional[Union[str, Path]] = None) -> dict[str, str]:
    """Load the Latin-to-Arabic mapping (the bundled table by default).

    The table is a data file so it can be edited without touching code;
    every target string must be Arabic-script only.
    """
    if path is None:
        raw = resources.files("fooctts").joinpath("data/translit_table.json").read_text("utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    doc = json.loads(raw)
    table = doc["map"] if isinstance(doc, dict) else doc
    for src, dst in table.items():
        for ch in dst:
            if classify_char(ch) is not Script.ARABIC:
                raise ValueError(f"table entry {src!r} -> {dst!r} is not Arabic script")
    return dict(table)


_DEFAULT_TABLE: Optional[dict[str, str]] = None


def _default_table() -> dict[str, str]:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = load_translit_table()
    return _DEFAULT_TABLE


def transliterate(token: Token, table: Optional[dict[str, str]] = None) -> str:
    """Map a Latin token into Arabic script by greedy longest match.

    Unmapped characters are dropped with a logged warning; the output
    contains only Arabic-block codepoints.
    """
    if token.script is not Script.LATIN:
        raise NotLatinToken(f"token {token.text!r} is {token.script.value}, not latin")
    return transliterate_text(token.text, table)


def transliterate_text(text: str, table: Optional[dict[str, str]] = None) -> str:
    if table is None:
        table = _default_table()
    if not text:
        log.warning("transliterate: empty token")
        return ""
    lowered = text.lower()
    max_len = max(len(k) for k in table)
    out = []
    i = 0
    while i < len(lowered):
        for length in range(min(max_len, len(lowered) - i), 0, -1):
            piece = lowered[i : i + length]
            if piece in table:
                out.append(table[piece])
                i += length
                break
        else:
            log.warning("transliterate: dropping unmapped character %r in %r", lowered[i], text)
            i += 1
    return "".join(out)


@dataclass
class VowelizerConfig:
    endpoint: Optional[str] = None
    timeout_ms: int = 5000
    cache_capacity: int = 10000
    mode: str = "offline_passthrough"  # or "remote"
    max_concurrency: int = 4

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.mode not in ("remote", "offline_passthrough"):
            raise ValueError(f"unknown vowelizer mode {self.mode!r}")
        if self.mode == "remote" and not self.endpoint:
            raise ValueError("remote mode requires an endpoint")


class VowelizerClient:
    """Diacritization client: POST plain text, get diacritized text back.

    Results are cached (LRU, keyed by the exact input) and at most
    max_concurrency requests are in flight at once. In
    offline_passthrough mode the input is returned unchanged: a wrong
    guessed diacritization is worse for TTS than none.
    """

    def __init__(self, cfg: VowelizerConfig, transport: Optional[httpx.BaseTransport] = None):
        self.cfg = cfg
        self._cache: OrderedDict[str, str] = OrderedDict()
        self._lock = threading.Lock()
        self._gate = threading.BoundedSemaphore(cfg.max_concurrency)
        self._client = None
        if cfg.mode == "remote":
            self._client = httpx.Client(timeout=cfg.timeout_ms / 1000.0, transport=transport)

    def vowelize(self, text: str) -> str:
        if self.cfg.mode == "offline_passthrough":
            return text
        with self._lock:
            if text in self._cache:
                self._cache.move_to_end(text)
                return self._cache[text]
        try:
            with self._gate:
                resp = self._client.post(
                    self.cfg.endpoint,
                    content=text.encode("utf-8"),
                    headers={"Content-Type": "text/plain; charset=utf-8"},
                )
        except httpx.TimeoutException as exc:
            raise VowelizerTimeout(f"vowelizer timed out: {exc}", text) from exc
        except httpx.HTTPError as exc:
            raise VowelizerTimeout(f"vowelizer unreachable: {exc}", text) from exc
        if resp.status_code != 200:
            raise VowelizerHttpError(resp.status_code, text)
        result = resp.content.decode("utf-8")
        with self._lock:
            self._cache[text] = result
            self._cache.move_to_end(text)
            while len(self._cache) > self.cfg.cache_capacity:
                self._cache.popitem(last=False)
        return result

    def close(self) -> None:
        if self._client is not None:
            self._client.close()
