"""Utterance records, emotion labeling, splits, and Kaldi-style manifests.

A corpus directory holds six text files, all space-separated, UTF-8, and
sorted by their first field: wav.scp (recording_id -> wav path), segments
(utt_id recording_id start end), text (vowelized), text_raw, utt2spk and
utt2emotion. Times are fixed 3-decimal seconds.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from . import audio
from .errors import FoocttsError
from .features import F0Track

DEFAULT_SPEAKER = "commentator01"

MANIFEST_FILES = ("wav.scp", "segments", "text", "text_raw", "utt2spk", "utt2emotion")


class NoVoicedFrames(FoocttsError):
    pass


class UnknownLabel(FoocttsError):
    pass


class DuplicateUttId(FoocttsError):
    pass


class NotEnoughRecords(FoocttsError):
    pass


class UnresolvedAudio(FoocttsError):
    pass


class UnlabeledEmotion(FoocttsError):
    pass


class EmotionLabel(enum.Enum):
    NEUTRAL = "neutral"
    EXCITED = "excited"
    VERY_EXCITED = "very_excited"


@dataclass(frozen=True)
class UtteranceRecord:
    utt_id: str
    recording_id: str
    start_s: float
    end_s: float
    text_raw: str
    text_vowelized: str
    emotion: Optional[EmotionLabel] = None  # None = unlabeled
    align_score: Optional[float] = None
    speaker_id: str = DEFAULT_SPEAKER

    def __post_init__(self):
        if not self.start_s < self.end_s:
            raise ValueError(f"{self.utt_id}: start {self.start_s} must precede end {self.end_s}")
        if not self.utt_id.startswith(self.recording_id):
            # Kaldi sorts files by utt_id; the recording prefix keeps
            # segments grouped with their wav.scp entry.
            raise ValueError(f"utt_id {self.utt_id!r} must begin with {self.recording_id!r}")
        if self.align_score is not None and self.align_score > 1e-6:
            raise ValueError(f"{self.utt_id}: align_score must be <= 0")


@dataclass(frozen=True)
class SplitSpec:
    n_dev: int = 25
    n_test: int = 25
    seed: int = 0

    def __post_init__(self):
        if self.n_dev < 0 or self.n_test < 0:
            raise ValueError("split sizes cannot be negative")


def suggest_emotion(f0: F0Track, t1: float = 170.0, t2: float = 250.0) -> EmotionLabel:
    """Pitch-based label suggestion: higher mean voiced F0, more excited.

    Mean voiced F0 below t1 is neutral, in [t1, t2) excited, at or above
    t2 very excited. Suggestions are a starting point for the manual
    labels, not a replacement.
    """
    if not t1 < t2:
        raise ValueError("need t1 < t2")
    voiced = f0.f0_hz[f0.f0_hz > 0]
    if voiced.size == 0:
        raise NoVoicedFrames("cannot suggest an emotion without voiced frames")
    mean_f0 = float(voiced.mean())
    if mean_f0 < t1:
        return EmotionLabel.NEUTRAL
    if mean_f0 < t2:
        return EmotionLabel.EXCITED
    return EmotionLabel.VERY_EXCITED


def ingest_labels(tsv_path: Union[str, Path]) -> dict[str, EmotionLabel]:
    """Read manual labels from a `utt_id<TAB>label` file.

    Labels are case-insensitive; anything outside the three classes is
    rejected, as are duplicate utterance ids. Manual labels override
    pitch suggestions downstream.
    """
    by_value = {lab.value: lab for lab in EmotionLabel}
    labels: dict[str, EmotionLabel] = {}
    for line_no, line in enumerate(
        Path(tsv_path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or parts[1].strip().lower() not in by_value:
            raise UnknownLabel(f"line {line_no}: {line!r}")
        utt_id = parts[0].strip()
        if utt_id in labels:
            raise DuplicateUttId(f"line {line_no}: duplicate utterance id {utt_id!r}")
        labels[utt_id] = by_value[parts[1].strip().lower()]
    return labels


def split(
    records: Sequence[UtteranceRecord],
    spec: SplitSpec,
    strategy: str = "random",
) -> tuple[list[UtteranceRecord], list[UtteranceRecord], list[UtteranceRecord]]:
    """Partition records into (train, dev, test).

    The default strategy sorts by utt_id and then shuffles with the
    spec's seed, so the partition is independent of input order;
    "chronological" instead takes dev and test from the tail of the
    (recording, start time) ordering. Partitions are disjoint, cover the
    input, and have exactly the requested dev/test sizes.
    """
    held_out = spec.n_dev + spec.n_test
    if held_out >= len(records):
        raise NotEnoughRecords(
            f"need more than {held_out} records to hold out {spec.n_dev}+{spec.n_test}, "
            f"got {len(records)}"
        )
    if strategy == "random":
        ordered = sorted(records, key=lambda r: r.utt_id)
        random.Random(spec.seed).shuffle(ordered)
        dev = ordered[: spec.n_dev]
        test = ordered[spec.n_dev : held_out]
        train = ordered[held_out:]
    elif strategy == "chronological":
        ordered = sorted(records, key=lambda r: (r.recording_id, r.start_s, r.utt_id))
        train = ordered[: len(ordered) - held_out]
        dev = ordered[len(ordered) - held_out : len(ordered) - spec.n_test]
        test = ordered[len(ordered) - spec.n_test :]
    else:
        raise ValueError(f"unknown split strategy {strategy!r}")
    key = lambda r: r.utt_id
    return sorted(train, key=key), sorted(dev, key=key), sorted(test, key=key)


def _check_unique(records: Sequence[UtteranceRecord]) -> None:
    seen = set()
    for rec in records:
        if rec.utt_id in seen:
            raise DuplicateUttId(rec.utt_id)
        seen.add(rec.utt_id)


def emit_manifests(
    records: Sequence[UtteranceRecord],
    out_dir: Union[str, Path],
    wav_paths: Mapping[str, Union[str, Path]],
    allow_unlabeled: bool = False,
) -> None:
    """Write the six manifest files for a record set.

    Every utterance must carry exactly one emotion label; unlabeled
    records abort the emission unless allow_unlabeled maps them to
    neutral. Recordings missing from wav_paths raise UnresolvedAudio.
    """
    _check_unique(records)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    emotions = {}
    for rec in records:
        if rec.emotion is None:
            if not allow_unlabeled:
                raise UnlabeledEmotion(f"{rec.utt_id} has no emotion label")
            emotions[rec.utt_id] = EmotionLabel.NEUTRAL
        else:
            emotions[rec.utt_id] = rec.emotion

    recordings = sorted({rec.recording_id for rec in records})
    for rec in records:
        if rec.recording_id not in wav_paths:
            raise UnresolvedAudio(f"{rec.utt_id}: no wav path for {rec.recording_id!r}")

    ordered = sorted(records, key=lambda r: r.utt_id)
    files = {
        "wav.scp": [f"{rid} {wav_paths[rid]}" for rid in recordings],
        "segments": [
            f"{r.utt_id} {r.recording_id} {r.start_s:.3f} {r.end_s:.3f}" for r in ordered
        ],
        "text": [f"{r.utt_id} {r.text_vowelized}" for r in ordered],
        "text_raw": [f"{r.utt_id} {r.text_raw}" for r in ordered],
        "utt2spk": [f"{r.utt_id} {r.speaker_id}" for r in ordered],
        "utt2emotion": [f"{r.utt_id} {emotions[r.utt_id].value}" for r in ordered],
    }
    for name, lines in files.items():
        (out_dir / name).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def _read_keyed(path: Path) -> dict[str, str]:
    entries: dict[str, str] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        key, _, rest = line.partition(" ")
        if key in entries:
            raise DuplicateUttId(f"{path.name}: duplicate id {key!r}")
        entries[key] = rest
    return entries


def load_wav_scp(manifest_dir: Union[str, Path]) -> dict[str, str]:
    return _read_keyed(Path(manifest_dir) / "wav.scp")


def parse_manifests(manifest_dir: Union[str, Path]) -> list[UtteranceRecord]:
    """Rebuild utterance records from an emitted manifest directory.

    Inverse of emit_manifests up to wav paths (kept in wav.scp only) and
    alignment scores (not part of the manifest format).
    """
    manifest_dir = Path(manifest_dir)
    segments = _read_keyed(manifest_dir / "segments")
    text = _read_keyed(manifest_dir / "text")
    text_raw = _read_keyed(manifest_dir / "text_raw")
    utt2spk = _read_keyed(manifest_dir / "utt2spk")
    utt2emotion = _read_keyed(manifest_dir / "utt2emotion")
    by_value = {lab.value: lab for lab in EmotionLabel}

    records = []
    for utt_id in sorted(segments):
        rec_id, start, end = segments[utt_id].split()
        records.append(
            UtteranceRecord(
                utt_id=utt_id,
                recording_id=rec_id,
                start_s=float(start),
                end_s=float(end),
                text_raw=text_raw.get(utt_id, ""),
                text_vowelized=text.get(utt_id, ""),
                emotion=by_value.get(utt2emotion.get(utt_id, "")),
                align_score=None,
                speaker_id=utt2spk.get(utt_id, DEFAULT_SPEAKER),
            )
        )
    return records


@dataclass(frozen=True)
class ValidationIssue:
    kind: str
    message: str
    utt_id: Optional[str] = None


def validate_manifest(manifest_dir: Union[str, Path]) -> list[ValidationIssue]:
    """Cross-check a manifest directory; an empty report means valid.

    Checks: all six files present, ids unique, every utterance present in
    every per-utterance file, recordings resolvable and readable, segment
    spans sane and within the recording duration, emotion labels valid.
    """
    manifest_dir = Path(manifest_dir)
    issues: list[ValidationIssue] = []

    missing = [name for name in MANIFEST_FILES if not (manifest_dir / name).exists()]
    for name in missing:
        issues.append(ValidationIssue("MissingFile", f"{name} is missing"))
    if missing:
        return issues

    tables: dict[str, dict[str, str]] = {}
    for name in MANIFEST_FILES:
        try:
            tables[name] = _read_keyed(manifest_dir / name)
        except DuplicateUttId as exc:
            issues.append(ValidationIssue("DuplicateId", str(exc)))
            return issues

    utt_files = [name for name in MANIFEST_FILES if name != "wav.scp"]
    all_utts = set().union(*(tables[name].keys() for name in utt_files))
    for name in utt_files:
        for utt_id in sorted(all_utts - tables[name].keys()):
            issues.append(
                ValidationIssue("MissingEntry", f"{utt_id} missing from {name}", utt_id)
            )

    durations: dict[str, Optional[float]] = {}
    for rec_id, path in tables["wav.scp"].items():
        try:
            n, rate = audio.wav_info(path)
            durations[rec_id] = n / rate
        except (FoocttsError, OSError) as exc:
            durations[rec_id] = None
            issues.append(ValidationIssue("UnreadableAudio", f"{rec_id}: {exc}"))

    valid_emotions = {lab.value for lab in EmotionLabel}
    for utt_id, rest in sorted(tables["segments"].items()):
        parts = rest.split()
        if len(parts) != 3:
            issues.append(ValidationIssue("BadSegmentLine", f"{utt_id}: {rest!r}", utt_id))
            continue
        rec_id, start, end = parts[0], float(parts[1]), float(parts[2])
        if rec_id not in tables["wav.scp"]:
            issues.append(
                ValidationIssue("MissingRecording", f"{utt_id}: {rec_id} not in wav.scp", utt_id)
            )
        elif durations.get(rec_id) is not None and end > durations[rec_id] + 1e-6:
            issues.append(
                ValidationIssue(
                    "SegmentOutOfRange",
                    f"{utt_id} ends at {end:.3f}s but {rec_id} lasts {durations[rec_id]:.3f}s",
                    utt_id,
                )
            )
        if not start < end:
            issues.append(ValidationIssue("BadSpan", f"{utt_id}: [{start}, {end}]", utt_id))
        if not utt_id.startswith(rec_id):
            issues.append(
                ValidationIssue(
                    "BadUttId", f"{utt_id} does not begin with its recording id", utt_id
                )
            )
    for utt_id, label in sorted(tables["utt2emotion"].items()):
        if label not in valid_emotions:
            issues.append(ValidationIssue("UnknownLabel", f"{utt_id}: {label!r}", utt_id))
    return issues


# ---------------------------------------------------------------------------
# Record TSV: the inspectable intermediate between pipeline stages.

_TSV_COLUMNS = (
    "utt_id recording_id start_s end_s speaker_id emotion align_score text_raw text_vowelized"
).split()
_ABSENT = "-"


def write_records_tsv(records: Iterable[UtteranceRecord], path: Union[str, Path]) -> None:
    lines = []
    for r in records:
        emotion = r.emotion.value if r.emotion is not None else _ABSENT
        score = f"{r.align_score:.6f}" if r.align_score is not None else _ABSENT
        lines.append(
            "\t".join(
                [
                    r.utt_id,
                    r.recording_id,
                    f"{r.start_s:.3f}",
                    f"{r.end_s:.3f}",
                    r.speaker_id,
                    emotion,
                    score,
                    r.text_raw,
                    r.text_vowelized,
                ]
            )
        )
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_records_tsv(path: Union[str, Path]) -> list[UtteranceRecord]:
    by_value = {lab.value: lab for lab in EmotionLabel}
    records = []
    for line_no, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != len(_TSV_COLUMNS):
            raise ValueError(
                f"{path}: line {line_no} has {len(parts)} fields, expected {len(_TSV_COLUMNS)}"
            )
        utt_id, rec_id, start, end, speaker, emotion, score, raw, vowelized = parts
        if emotion != _ABSENT and emotion not in by_value:
            raise UnknownLabel(f"{path}: line {line_no}: {emotion!r}")
        records.append(
            UtteranceRecord(
                utt_id=utt_id,
                recording_id=rec_id,
                start_s=float(start),
                end_s=float(end),
                text_raw=raw,
                text_vowelized=vowelized,
                emotion=by_value.get(emotion),
                align_score=None if score == _ABSENT else float(score),
                speaker_id=speaker,
            )
        )
    return records
