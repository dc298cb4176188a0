"""Shared fixtures: synthetic signals and tiny HTTP servers for the
vowelizer and remote-TTS wire contracts."""

import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from fooctts.audio import AudioBuffer, wav_bytes

RATE = 22050


def make_tone(freq_hz, seconds=1.0, rate=RATE, amplitude=0.5):
    t = np.arange(int(round(seconds * rate))) / rate
    return AudioBuffer(samples=amplitude * np.sin(2 * np.pi * freq_hz * t), sample_rate=rate)


def make_white_noise(seconds=1.0, rate=RATE, amplitude=0.4, seed=42):
    rng = np.random.default_rng(seed)
    n = int(round(seconds * rate))
    return AudioBuffer(samples=rng.uniform(-amplitude, amplitude, n), sample_rate=rate)


def make_silence(seconds=1.0, rate=RATE):
    return AudioBuffer(samples=np.zeros(int(round(seconds * rate))), sample_rate=rate)


def make_speech_proxy(seconds=1.0, rate=RATE, f0=150.0, am_hz=4.0):
    """Amplitude-modulated harmonic series: periodic like voiced speech,
    with syllable-rate energy fluctuation that separates it from a
    steady tone."""
    t = np.arange(int(round(seconds * rate))) / rate
    envelope = 0.6 + 0.4 * np.sin(2 * np.pi * am_hz * t)
    sig = np.zeros_like(t)
    for k, amp in enumerate([1.0, 0.6, 0.4, 0.25, 0.15], start=1):
        sig += amp * np.sin(2 * np.pi * f0 * k * t)
    sig = 0.4 * envelope * sig / np.abs(sig).max()
    return AudioBuffer(samples=sig, sample_rate=rate)


ARABIC_LETTER_LO, ARABIC_LETTER_HI = "ء", "ي"
FATHA = "َ"


def fatha_after_consonants(text: str) -> str:
    out = []
    for ch in text:
        out.append(ch)
        if ARABIC_LETTER_LO <= ch <= ARABIC_LETTER_HI:
            out.append(FATHA)
    return "".join(out)


class _VowelizerHandler(BaseHTTPRequestHandler):
    """The vowelizer wire contract: POST UTF-8 text, 200 diacritized text."""

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        text = self.rfile.read(length).decode("utf-8")
        self.server.request_count += 1
        body = fatha_after_consonants(text).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "text/plain; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


class _TtsBackendHandler(BaseHTTPRequestHandler):
    """Remote TTS contract: POST JSON, 200 WAV bytes (or a forced error)."""

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        self.rfile.read(length)
        if self.server.fail_with:
            self.send_response(self.server.fail_with)
            self.send_header("Content-Length", "0")
            self.end_headers()
            return
        body = wav_bytes(make_tone(440.0, seconds=1.0, rate=self.server.wav_rate))
        self.send_response(200)
        self.send_header("Content-Type", "audio/wav")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


class MockServer:
    def __init__(self, handler):
        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), handler)
        self.httpd.request_count = 0
        self.httpd.fail_with = None
        self.httpd.wav_rate = RATE
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()

    @property
    def url(self):
        host, port = self.httpd.server_address
        return f"http://{host}:{port}/"

    def stop(self):
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture()
def mock_vowelizer():
    server = MockServer(_VowelizerHandler)
    yield server
    server.stop()


@pytest.fixture()
def mock_tts_backend():
    server = MockServer(_TtsBackendHandler)
    yield server
    server.stop()
