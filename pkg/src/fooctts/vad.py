"""Four-class activity segmentation: speech, noise, music, noEnergy.

The classifier is a deterministic heuristic cascade over the frame
features (energy gate, then a music gate on flatness plus local
stability, then a speech band on zcr/flatness, else noise). It fills the
same contract as a model-backed segmenter; swap in another classifier by
providing any callable with the classify_frames signature.

Segment lists serialize as UTF-8 lines `<start>\t<end>\t<label>` with
3-decimal fixed-point seconds.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .audio import AudioBuffer
from .errors import FoocttsError
from .features import FeatureTrack


class EmptyTrack(FoocttsError):
    pass


class SegmentOutOfRange(FoocttsError):
    pass


class SegmentLabel(enum.Enum):
    SPEECH = "speech"
    NOISE = "noise"
    MUSIC = "music"
    NO_ENERGY = "noEnergy"


# Deterministic preference order for majority-vote ties.
_LABEL_ORDER = [
    SegmentLabel.SPEECH,
    SegmentLabel.NOISE,
    SegmentLabel.MUSIC,
    SegmentLabel.NO_ENERGY,
]


@dataclass(frozen=True)
class Segment:
    start_s: float
    end_s: float
    label: SegmentLabel

    def __post_init__(self):
        if not (0.0 <= self.start_s < self.end_s):
            raise ValueError(f"bad segment span [{self.start_s}, {self.end_s}]")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass
class VadConfig:
    """Thresholds for the heuristic cascade.

    The stability gates (music_*) measure the spread of energy and
    flatness over a short centered window: sustained tones are flat and
    stable, speech is flat-ish but fluctuates, broadband noise is not
    flat at all. All thresholds were calibrated on synthetic fixtures.
    """

    energy_floor_db: float = -55.0
    flatness_music_max: float = 0.15
    music_energy_std_db_max: float = 1.0
    music_flatness_std_max: float = 0.05
    zcr_speech_range: tuple[float, float] = (3.0, 120.0)
    flatness_speech_max: float = 0.35
    stability_window: int = 9
    min_segment_s: float = 0.3
    smooth_window: int = 11

    def __post_init__(self):
        if self.min_segment_s <= 0:
            raise ValueError("min_segment_s must be positive")
        if self.smooth_window < 1 or self.smooth_window % 2 == 0:
            raise ValueError("smooth_window must be a positive odd frame count")
        if self.stability_window < 1 or self.stability_window % 2 == 0:
            raise ValueError("stability_window must be a positive odd frame count")
        for name in ("energy_floor_db", "flatness_music_max", "music_energy_std_db_max",
                     "music_flatness_std_max", "flatness_speech_max"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def _local_std(values: np.ndarray, window: int) -> np.ndarray:
    """Standard deviation over a centered window, edges replicated."""
    half = window // 2
    padded = np.pad(values, half, mode="edge")
    frames = np.lib.stride_tricks.sliding_window_view(padded, window)
    return frames.std(axis=1)


def classify_frames(features: FeatureTrack, cfg: VadConfig) -> list[SegmentLabel]:
    """Label every frame with one of the four activity classes.

    Cascade: below the energy floor -> noEnergy; very flat spectrum that is
    also locally stable -> music; zcr and flatness inside the speech band
    -> speech; everything else -> noise. Deterministic for a fixed config.
    """
    if features.n_frames == 0:
        raise EmptyTrack("feature track has no frames")
    energy_std = _local_std(features.energy_db, cfg.stability_window)
    flat_std = _local_std(features.spectral_flatness, cfg.stability_window)
    zcr_lo, zcr_hi = cfg.zcr_speech_range

    labels = []
    for i in range(features.n_frames):
        if features.energy_db[i] < cfg.energy_floor_db:
            labels.append(SegmentLabel.NO_ENERGY)
        elif (
            features.spectral_flatness[i] < cfg.flatness_music_max
            and energy_std[i] < cfg.music_energy_std_db_max
            and flat_std[i] < cfg.music_flatness_std_max
        ):
            labels.append(SegmentLabel.MUSIC)
        elif (
            zcr_lo <= features.zcr[i] <= zcr_hi
            and features.spectral_flatness[i] <= cfg.flatness_speech_max
        ):
            labels.append(SegmentLabel.SPEECH)
        else:
            labels.append(SegmentLabel.NOISE)
    return labels


def _majority_smooth(labels: list[SegmentLabel], window: int) -> list[SegmentLabel]:
    """Majority vote over a centered window (the categorical median).

    Ties keep the original center label when it is among the leaders,
    otherwise fall back to the fixed label order.
    """
    if window <= 1 or len(labels) <= 1:
        return list(labels)
    half = window // 2
    n = len(labels)
    out = []
    for i in range(n):
        lo, hi = max(0, i - half), min(n, i + half + 1)
        counts: dict[SegmentLabel, int] = {}
        for lab in labels[lo:hi]:
            counts[lab] = counts.get(lab, 0) + 1
        top = max(counts.values())
        leaders = [lab for lab in _LABEL_ORDER if counts.get(lab, 0) == top]
        out.append(labels[i] if labels[i] in leaders else leaders[0])
    return out


def _runs(labels: Sequence[SegmentLabel]) -> list[list]:
    runs = []
    for lab in labels:
        if runs and runs[-1][0] is lab:
            runs[-1][1] += 1
        else:
            runs.append([lab, 1])
    return runs


def smooth_and_segment(
    labels: Sequence[SegmentLabel],
    cfg: VadConfig,
    frame_len_ms: float = 25.0,
    hop_ms: float = 10.0,
    duration_s: float | None = None,
) -> list[Segment]:
    """Smooth frame labels and merge them into a gapless segment tiling.

    Majority smoothing first, then runs shorter than min_segment_s are
    absorbed into their longer neighbor (shortest run first). Boundaries
    land on frame starts; the result tiles [0, duration_s] exactly.
    """
    labels = list(labels)
    if not labels:
        raise EmptyTrack("no labels to segment")
    hop_s = hop_ms / 1000.0
    if duration_s is None:
        duration_s = (len(labels) - 1) * hop_s + frame_len_ms / 1000.0

    smoothed = _majority_smooth(labels, cfg.smooth_window)
    runs = _runs(smoothed)

    min_frames = int(np.ceil(cfg.min_segment_s / hop_s))
    while len(runs) > 1:
        lengths = [r[1] for r in runs]
        shortest = min(range(len(runs)), key=lambda i: (lengths[i], i))
        if lengths[shortest] >= min_frames:
            break
        if shortest == 0:
            neighbor = 1
        elif shortest == len(runs) - 1:
            neighbor = len(runs) - 2
        else:
            left, right = shortest - 1, shortest + 1
            neighbor = left if runs[left][1] >= runs[right][1] else right
        runs[shortest][0] = runs[neighbor][0]
        merged = []
        for lab, count in runs:
            if merged and merged[-1][0] is lab:
                merged[-1][1] += count
            else:
                merged.append([lab, count])
        runs = merged

    segments = []
    frame = 0
    for idx, (lab, count) in enumerate(runs):
        start = 0.0 if idx == 0 else frame * hop_s
        frame += count
        end = duration_s if idx == len(runs) - 1 else frame * hop_s
        segments.append(Segment(start_s=start, end_s=end, label=lab))
    return segments


def filter_speech(segments: Iterable[Segment]) -> list[Segment]:
    """Keep only the speech segments, in order."""
    return [seg for seg in segments if seg.label is SegmentLabel.SPEECH]


def cut_audio(buffer: AudioBuffer, segments: Iterable[Segment]) -> list[AudioBuffer]:
    """Extract one clip per segment; adjacent segments concatenate exactly."""
    clips = []
    n = len(buffer)
    for seg in segments:
        i0 = int(round(seg.start_s * buffer.sample_rate))
        i1 = int(round(seg.end_s * buffer.sample_rate))
        if i0 < 0 or i1 > n:
            raise SegmentOutOfRange(
                f"segment [{seg.start_s:.3f}, {seg.end_s:.3f}] outside buffer "
                f"of {buffer.duration_s:.3f} s"
            )
        clips.append(AudioBuffer(samples=buffer.samples[i0:i1], sample_rate=buffer.sample_rate))
    return clips


def format_segments(segments: Iterable[Segment]) -> str:
    return "".join(
        f"{seg.start_s:.3f}\t{seg.end_s:.3f}\t{seg.label.value}\n" for seg in segments
    )


def write_segments(segments: Iterable[Segment], path: Union[str, Path]) -> None:
    Path(path).write_text(format_segments(segments), encoding="utf-8")


def parse_segments(text: str) -> list[Segment]:
    by_value = {lab.value: lab for lab in SegmentLabel}
    segments = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3 or parts[2] not in by_value:
            raise ValueError(f"bad segment line {line_no}: {line!r}")
        segments.append(Segment(float(parts[0]), float(parts[1]), by_value[parts[2]]))
    return segments


def read_segments(path: Union[str, Path]) -> list[Segment]:
    return parse_segments(Path(path).read_text(encoding="utf-8"))
