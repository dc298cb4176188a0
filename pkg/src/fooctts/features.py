"""Frame-level signal features: energy, zero crossings, flatness, and F0.

Default framing is 25 ms windows with a 10 ms hop, the usual speech
analysis geometry. Frame i covers samples [i*hop, i*hop + frame_len); the
frame count for n samples is floor((n - frame_len)/hop) + 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer
from .errors import FoocttsError

ENERGY_FLOOR = 1e-12  # -120 dB; keeps log10 defined on digital silence


class BufferTooShort(FoocttsError):
    """Audio is shorter than one analysis frame."""


@dataclass(frozen=True)
class FeatureTrack:
    """Per-frame energy (dBFS), zero-crossing count, and spectral flatness."""

    frame_len_ms: float
    hop_ms: float
    energy_db: np.ndarray
    zcr: np.ndarray
    spectral_flatness: np.ndarray

    @property
    def n_frames(self) -> int:
        return int(self.energy_db.size)


@dataclass(frozen=True)
class F0Track:
    """Per-frame fundamental frequency (0 = unvoiced) and voicing confidence."""

    frame_len_ms: float
    hop_ms: float
    f0_hz: np.ndarray
    voicing_confidence: np.ndarray

    @property
    def n_frames(self) -> int:
        return int(self.f0_hz.size)


def _frame_signal(buffer: AudioBuffer, frame_len_ms: float, hop_ms: float):
    rate = buffer.sample_rate
    frame_len = int(round(frame_len_ms * rate / 1000.0))
    hop = int(round(hop_ms * rate / 1000.0))
    if frame_len <= 0 or hop <= 0:
        raise ValueError("frame and hop must be at least one sample")
    if frame_len < hop:
        raise ValueError(f"frame_len ({frame_len_ms} ms) must be >= hop ({hop_ms} ms)")
    if len(buffer) < frame_len:
        raise BufferTooShort(
            f"need at least {frame_len} samples for one frame, got {len(buffer)}"
        )
    windows = np.lib.stride_tricks.sliding_window_view(buffer.samples, frame_len)
    return windows[::hop], frame_len, hop


def frame_features(
    buffer: AudioBuffer, frame_len_ms: float = 25.0, hop_ms: float = 10.0
) -> FeatureTrack:
    """Compute the energy / zero-crossing / flatness track of a buffer.

    energy_db is 10*log10(mean(x^2) + 1e-12). zcr counts sign changes
    within the frame. Spectral flatness is the geometric over arithmetic
    mean of the Hann-windowed magnitude spectrum, DC bin excluded, and is
    scale-invariant; an all-zero frame reports flatness 1.0.
    """
    frames, frame_len, _hop = _frame_signal(buffer, frame_len_ms, hop_ms)

    energy_db = 10.0 * np.log10(np.mean(np.square(frames), axis=1) + ENERGY_FLOOR)

    negative = np.signbit(frames)
    zcr = np.sum(negative[:, 1:] != negative[:, :-1], axis=1).astype(np.float64)

    window = np.hanning(frame_len)
    spectrum = np.abs(np.fft.rfft(frames * window, axis=1))[:, 1:]
    arith = np.mean(spectrum, axis=1)
    geo = np.exp(np.mean(np.log(spectrum + 1e-30), axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        flatness = np.where(arith > 1e-15, geo / np.maximum(arith, 1e-300), 1.0)
    flatness = np.clip(flatness, 0.0, 1.0)

    return FeatureTrack(
        frame_len_ms=frame_len_ms,
        hop_ms=hop_ms,
        energy_db=energy_db,
        zcr=zcr,
        spectral_flatness=flatness,
    )


def estimate_f0(
    buffer: AudioBuffer,
    frame_len_ms: float = 25.0,
    hop_ms: float = 10.0,
    f0_min: float = 60.0,
    f0_max: float = 400.0,
    voicing_threshold: float = 0.5,
) -> F0Track:
    """Autocorrelation pitch tracking with the same framing as frame_features.

    Each frame is mean-removed, its normalized autocorrelation is searched
    over lags [rate/f0_max, rate/f0_min], and the peak lag is refined by
    parabolic interpolation. Frames whose peak falls below the voicing
    threshold report f0 = 0; voiced frames report rate/lag clipped into
    [f0_min, f0_max].
    """
    rate = buffer.sample_rate
    if not (0.0 < f0_min < f0_max):
        raise ValueError("need 0 < f0_min < f0_max")
    if f0_max > rate / 4.0:
        raise ValueError(f"f0_max {f0_max} exceeds sample_rate/4 ({rate / 4:.0f})")
    frames, frame_len, _hop = _frame_signal(buffer, frame_len_ms, hop_ms)
    frames = frames - frames.mean(axis=1, keepdims=True)
    n_frames = frames.shape[0]

    lag_min = max(2, int(np.floor(rate / f0_max)))
    lag_max = min(int(np.ceil(rate / f0_min)), frame_len - 2)
    if lag_max <= lag_min:
        raise ValueError("frame too short for the requested F0 search range")

    # Full autocorrelation of every frame in one FFT pass.
    fft_len = 1 << int(np.ceil(np.log2(2 * frame_len)))
    spec = np.fft.rfft(frames, n=fft_len, axis=1)
    autocorr = np.fft.irfft(spec.real**2 + spec.imag**2, n=fft_len, axis=1)[:, :frame_len]

    # Normalization: r(lag) = sum(x[i] x[i+lag]) / sqrt(E_head(lag) E_tail(lag))
    # with E_head(lag) = sum of x[0 .. n-lag-1]^2 and E_tail(lag) = sum of x[lag ..]^2.
    sq = np.square(frames)
    csum = np.concatenate([np.zeros((n_frames, 1)), np.cumsum(sq, axis=1)], axis=1)
    total = csum[:, -1:]
    lags = np.arange(lag_min - 1, lag_max + 2)
    e_head = csum[:, frame_len - lags]
    e_tail = total - csum[:, lags]
    denom = np.sqrt(e_head * e_tail)
    num = autocorr[:, lags]
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.where(denom > 1e-12, num / np.maximum(denom, 1e-300), 0.0)

    # corr columns correspond to lags lag_min-1 .. lag_max+1; search the interior.
    interior = corr[:, 1:-1]
    peak = interior.max(axis=1)
    conf = np.clip(peak, 0.0, 1.0)

    f0 = np.zeros(n_frames)
    voiced = conf >= voicing_threshold
    for i in np.flatnonzero(voiced):
        # A periodic frame peaks at every multiple of its period; take the
        # shortest lag whose lobe reaches near the global peak, then climb
        # to that lobe's top so parabolic refinement sees a true maximum.
        row = interior[i]
        floor_val = max(voicing_threshold, 0.95 * peak[i])
        k = int(np.argmax(row >= floor_val))
        while k + 1 < row.size and row[k + 1] > row[k]:
            k += 1
        r_m1, r_0, r_p1 = corr[i, k], corr[i, k + 1], corr[i, k + 2]
        denom_p = r_m1 - 2.0 * r_0 + r_p1
        delta = 0.0
        if abs(denom_p) > 1e-12:
            delta = float(np.clip(0.5 * (r_m1 - r_p1) / denom_p, -1.0, 1.0))
        lag = (lag_min + k) + delta
        f0[i] = float(np.clip(rate / lag, f0_min, f0_max))

    return F0Track(
        frame_len_ms=frame_len_ms,
        hop_ms=hop_ms,
        f0_hz=f0,
        voicing_confidence=conf,
    )
