"""WAV I/O, resampling, and noise mixing."""

import io
import math
import struct

import numpy as np
import pytest

from fooctts.audio import (
    AudioBuffer,
    CorruptHeader,
    SampleRateMismatch,
    SilentNoiseSource,
    UnsupportedFormat,
    mix_noise,
    read_wav,
    resample,
    write_wav,
)

from conftest import make_tone, make_white_noise

QUANT_STEP = 1.0 / 32767.0


def wav_header(fmt_code=1, channels=1, rate=44100, bits=16, payload=b""):
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH", 16, fmt_code, channels, rate,
        rate * channels * bits // 8, channels * bits // 8, bits,
    )
    header += b"data" + struct.pack("<I", len(payload))
    return header + payload


class TestReadWav:
    def test_stereo_pcm16_preserves_duration(self, tmp_path):
        rate = 44100
        t = np.arange(rate) / rate
        left = np.round(0.5 * np.sin(2 * np.pi * 440 * t) * 32767).astype("<i2")
        right = np.round(0.25 * np.sin(2 * np.pi * 440 * t) * 32767).astype("<i2")
        payload = np.column_stack([left, right]).tobytes()
        path = tmp_path / "stereo.wav"
        path.write_bytes(wav_header(1, 2, rate, 16, payload))
        buf = read_wav(path)
        assert buf.sample_rate == rate
        assert len(buf) == rate  # mono, 1 s
        mean = (left.astype(np.float64) + right.astype(np.float64)) / (2 * 32767.0)
        assert np.allclose(buf.samples, mean)

    def test_zero_length_data_chunk(self, tmp_path):
        path = tmp_path / "empty.wav"
        path.write_bytes(wav_header(payload=b""))
        buf = read_wav(path)
        assert len(buf) == 0
        assert buf.sample_rate == 44100

    def test_mp3_compression_code_rejected(self, tmp_path):
        path = tmp_path / "mp3.wav"
        path.write_bytes(wav_header(fmt_code=85, payload=b"\x00\x00"))
        with pytest.raises(UnsupportedFormat):
            read_wav(path)

    def test_float32_input(self, tmp_path):
        samples = np.array([0.0, 0.5, -0.5, 1.0, -1.0], dtype="<f4")
        path = tmp_path / "f32.wav"
        path.write_bytes(wav_header(fmt_code=3, rate=22050, bits=32, payload=samples.tobytes()))
        buf = read_wav(path)
        assert np.allclose(buf.samples, samples)

    def test_float32_out_of_range_clamped(self, tmp_path):
        samples = np.array([1.5, -2.0], dtype="<f4")
        path = tmp_path / "loud.wav"
        path.write_bytes(wav_header(fmt_code=3, rate=22050, bits=32, payload=samples.tobytes()))
        buf = read_wav(path)
        assert buf.samples.tolist() == [1.0, -1.0]

    def test_not_riff(self, tmp_path):
        path = tmp_path / "junk.wav"
        path.write_bytes(b"not a wav file at all")
        with pytest.raises(CorruptHeader):
            read_wav(path)

    def test_truncated_chunk(self, tmp_path):
        good = wav_header(payload=b"\x00\x00" * 100)
        path = tmp_path / "trunc.wav"
        path.write_bytes(good[:-50])
        with pytest.raises(CorruptHeader):
            read_wav(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            read_wav(tmp_path / "nope.wav")


class TestWriteWav:
    def test_silence_duration(self, tmp_path):
        buf = AudioBuffer(samples=np.zeros(22050), sample_rate=22050)
        path = tmp_path / "silence.wav"
        write_wav(buf, path)
        back = read_wav(path)
        assert back.duration_s == 1.0
        assert np.all(back.samples == 0.0)

    def test_sine_round_trip_error_bound(self, tmp_path):
        buf = make_tone(440.0)
        path = tmp_path / "sine.wav"
        write_wav(buf, path)
        back = read_wav(path)
        assert np.max(np.abs(back.samples - buf.samples)) <= QUANT_STEP

    def test_clamps_before_quantizing(self, tmp_path):
        # buffers may carry overshoot (a hot mix); the writer clamps
        buf = AudioBuffer(samples=np.array([1.5, 0.5, -1.5]), sample_rate=8000)
        path = tmp_path / "clip.wav"
        write_wav(buf, path)
        back = read_wav(path)
        assert back.samples[0] == 1.0
        assert back.samples[2] == -1.0

    def test_round_trip_random_buffers(self, tmp_path):
        rng = np.random.default_rng(123)
        for i in range(100):
            n = int(rng.integers(1, 4000))
            buf = AudioBuffer(samples=rng.uniform(-1, 1, n), sample_rate=22050)
            out = io.BytesIO()
            write_wav(buf, out)
            out.seek(0)
            back = read_wav(out)
            assert back.sample_rate == buf.sample_rate
            assert len(back) == len(buf)
            assert np.max(np.abs(back.samples - buf.samples)) <= QUANT_STEP


class TestResample:
    def test_two_to_one(self):
        buf = make_tone(440.0, rate=44100)
        out = resample(buf, 22050)
        assert out.sample_rate == 22050
        assert len(out) == 22050

    def test_identity(self):
        buf = make_tone(440.0)
        out = resample(buf, buf.sample_rate)
        assert out is buf

    def test_dominant_frequency_preserved(self):
        # 100 Hz sine from 48 kHz to 22.05 kHz; count zero crossings.
        rate = 48000
        t = np.arange(rate) / rate
        buf = AudioBuffer(samples=0.8 * np.sin(2 * np.pi * 100 * t), sample_rate=rate)
        out = resample(buf, 22050)
        signs = np.signbit(out.samples)
        crossings = int(np.sum(signs[1:] != signs[:-1]))
        freq = crossings / 2.0 / out.duration_s
        assert abs(freq - 100.0) <= 1.0

    def test_round_trip_length(self):
        rng = np.random.default_rng(5)
        for n in [100, 1001, 22050, 12345]:
            buf = AudioBuffer(samples=rng.uniform(-1, 1, n), sample_rate=22050)
            back = resample(resample(buf, 44100), 22050)
            assert abs(len(back) - n) <= 1


class TestMixNoise:
    def test_infinite_snr_is_identity(self):
        speech = make_tone(200.0)
        noise = make_white_noise()
        out = mix_noise(speech, noise, math.inf)
        assert out is speech

    def test_equal_rms_zero_db_scale_one(self):
        rng = np.random.default_rng(0)
        speech = AudioBuffer(samples=0.1 * np.sign(rng.standard_normal(1000)), sample_rate=8000)
        noise = AudioBuffer(samples=0.1 * np.sign(rng.standard_normal(1000)), sample_rate=8000)
        out = mix_noise(speech, noise, 0.0)
        # scale 1.0: the mix equals the plain sum
        assert np.allclose(out.samples, speech.samples + noise.samples)

    def test_ten_db_scale(self):
        rng = np.random.default_rng(1)
        unit = lambda: rng.standard_normal(5000)
        s = unit()
        s /= np.sqrt(np.mean(s**2))
        n = unit()
        n /= np.sqrt(np.mean(n**2))
        # keep amplitudes small enough that no renormalization kicks in
        speech = AudioBuffer(samples=0.1 * s, sample_rate=8000)
        noise = AudioBuffer(samples=0.1 * n, sample_rate=8000)
        out = mix_noise(speech, noise, 10.0)
        scaled_noise = out.samples - speech.samples
        expected_scale = 10 ** (-10.0 / 20.0)
        measured = np.sqrt(np.mean(scaled_noise**2)) / np.sqrt(np.mean(noise.samples**2))
        assert abs(measured - expected_scale) < 1e-9

    def test_measured_snr_within_tolerance(self):
        # amplitudes kept low so the sum never exceeds full scale and the
        # scaled noise component is exactly out - speech
        rng = np.random.default_rng(99)
        for _ in range(20):
            speech = AudioBuffer(samples=rng.uniform(-0.3, 0.3, 3000), sample_rate=16000)
            noise = AudioBuffer(samples=rng.uniform(-0.2, 0.2, 1700), sample_rate=16000)
            snr = float(rng.uniform(0, 30))
            out = mix_noise(speech, noise, snr)
            assert np.max(np.abs(out.samples)) <= 1.0
            scaled = out.samples - speech.samples
            measured = 10 * np.log10(np.mean(speech.samples**2) / np.mean(scaled**2))
            assert abs(measured - snr) < 0.1

    def test_rate_mismatch(self):
        with pytest.raises(SampleRateMismatch):
            mix_noise(make_tone(200.0, rate=22050), make_white_noise(rate=16000), 10.0)

    def test_silent_noise(self):
        silence = AudioBuffer(samples=np.zeros(1000), sample_rate=22050)
        with pytest.raises(SilentNoiseSource):
            mix_noise(make_tone(200.0), silence, 10.0)

    def test_peak_normalization_only_when_needed(self):
        speech = make_tone(200.0, amplitude=0.9)
        noise = make_white_noise(amplitude=0.9, seed=7)
        out = mix_noise(speech, noise, 0.0)
        assert np.max(np.abs(out.samples)) <= 0.99 + 1e-12


class TestAudioBuffer:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            AudioBuffer(samples=np.array([0.0, np.nan]), sample_rate=8000)

    def test_rejects_bad_rate(self):
        with pytest.raises(ValueError):
            AudioBuffer(samples=np.zeros(4), sample_rate=0)

    def test_samples_immutable(self):
        buf = make_tone(100.0, seconds=0.01)
        with pytest.raises(ValueError):
            buf.samples[0] = 5.0
