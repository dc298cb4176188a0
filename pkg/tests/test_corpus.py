"""Records, emotion labels, splits, manifests, and validation."""

import random

import numpy as np
import pytest

from fooctts.corpus import (
    DuplicateUttId,
    EmotionLabel,
    NoVoicedFrames,
    NotEnoughRecords,
    SplitSpec,
    UnknownLabel,
    UnlabeledEmotion,
    UnresolvedAudio,
    UtteranceRecord,
    emit_manifests,
    ingest_labels,
    parse_manifests,
    read_records_tsv,
    split,
    suggest_emotion,
    validate_manifest,
    write_records_tsv,
)
from fooctts.features import F0Track
from fooctts.audio import write_wav

from conftest import make_tone


def f0_track(values):
    arr = np.asarray(values, dtype=np.float64)
    return F0Track(25.0, 10.0, arr, np.where(arr > 0, 0.9, 0.0))


ARABIC_WORDS = ["هدف", "جميل", "تمريرة", "تسديدة", "مرمى", "ركنية", "حارس"]


def make_records(count, seed=0, rec_ids=("m01", "m02"), labeled=True):
    rng = random.Random(seed)
    records = []
    for i in range(count):
        rec = rec_ids[i % len(rec_ids)]
        start = round(rng.uniform(0, 0.4), 3)
        records.append(
            UtteranceRecord(
                utt_id=f"{rec}_{i:04d}",
                recording_id=rec,
                start_s=start,
                end_s=round(start + rng.uniform(0.1, 0.5), 3),
                text_raw=" ".join(rng.choices(ARABIC_WORDS, k=rng.randint(1, 4))),
                text_vowelized=" ".join(rng.choices(ARABIC_WORDS, k=rng.randint(1, 4))),
                emotion=rng.choice(list(EmotionLabel)) if labeled else None,
                align_score=None,
                speaker_id="commentator01",
            )
        )
    return records


@pytest.fixture()
def wav_dir(tmp_path):
    audio_dir = tmp_path / "audio"
    audio_dir.mkdir()
    write_wav(make_tone(150.0, seconds=1.0), audio_dir / "m01.wav")
    write_wav(make_tone(200.0, seconds=1.0), audio_dir / "m02.wav")
    return audio_dir


class TestSuggestEmotion:
    def test_neutral(self):
        assert suggest_emotion(f0_track([140.0] * 10)) is EmotionLabel.NEUTRAL

    def test_very_excited(self):
        assert suggest_emotion(f0_track([300.0] * 10)) is EmotionLabel.VERY_EXCITED

    def test_boundary_is_excited(self):
        assert suggest_emotion(f0_track([170.0] * 5)) is EmotionLabel.EXCITED

    def test_upper_boundary_very_excited(self):
        assert suggest_emotion(f0_track([250.0] * 5)) is EmotionLabel.VERY_EXCITED

    def test_unvoiced_frames_ignored(self):
        assert suggest_emotion(f0_track([0.0, 0.0, 140.0])) is EmotionLabel.NEUTRAL

    def test_no_voiced_frames(self):
        with pytest.raises(NoVoicedFrames):
            suggest_emotion(f0_track([0.0, 0.0]))


class TestIngestLabels:
    def test_basic(self, tmp_path):
        path = tmp_path / "labels.tsv"
        path.write_text("m01_0000\texcited\nm01_0001\tVERY_EXCITED\n", encoding="utf-8")
        labels = ingest_labels(path)
        assert labels == {
            "m01_0000": EmotionLabel.EXCITED,
            "m01_0001": EmotionLabel.VERY_EXCITED,
        }

    def test_duplicate_rejected(self, tmp_path):
        path = tmp_path / "labels.tsv"
        path.write_text("a_0\tneutral\na_0\texcited\n", encoding="utf-8")
        with pytest.raises(DuplicateUttId):
            ingest_labels(path)

    def test_unknown_label(self, tmp_path):
        path = tmp_path / "labels.tsv"
        path.write_text("a_0\tangry\n", encoding="utf-8")
        with pytest.raises(UnknownLabel):
            ingest_labels(path)


class TestSplit:
    def test_default_sizes_1150_25_25(self):
        records = make_records(1200)
        train, dev, test = split(records, SplitSpec(n_dev=25, n_test=25, seed=1))
        assert (len(train), len(dev), len(test)) == (1150, 25, 25)

    def test_boundary_single_train_record(self):
        records = make_records(51)
        train, dev, test = split(records, SplitSpec(25, 25, seed=0))
        assert (len(train), len(dev), len(test)) == (1, 25, 25)

    def test_deterministic_and_order_invariant(self):
        records = make_records(120)
        spec = SplitSpec(25, 25, seed=9)
        a = split(records, spec)
        b = split(list(reversed(records)), spec)
        for part_a, part_b in zip(a, b):
            assert [r.utt_id for r in part_a] == [r.utt_id for r in part_b]

    def test_partitions_disjoint_and_exhaustive(self):
        records = make_records(90)
        train, dev, test = split(records, SplitSpec(25, 25, seed=4))
        ids = [r.utt_id for part in (train, dev, test) for r in part]
        assert len(ids) == len(set(ids)) == len(records)
        assert set(ids) == {r.utt_id for r in records}

    def test_not_enough_records(self):
        with pytest.raises(NotEnoughRecords):
            split(make_records(50), SplitSpec(25, 25, seed=0))

    def test_chronological_strategy(self):
        records = make_records(80)
        train, dev, test = split(records, SplitSpec(10, 10, seed=0), strategy="chronological")
        ordered = sorted(records, key=lambda r: (r.recording_id, r.start_s, r.utt_id))
        assert {r.utt_id for r in test} == {r.utt_id for r in ordered[-10:]}
        assert {r.utt_id for r in dev} == {r.utt_id for r in ordered[-20:-10]}


class TestManifests:
    def test_single_record_six_files(self, tmp_path, wav_dir):
        records = make_records(1, rec_ids=("m01",))
        out = tmp_path / "data"
        emit_manifests(records, out, {"m01": wav_dir / "m01.wav"})
        for name in ("wav.scp", "segments", "text", "text_raw", "utt2spk", "utt2emotion"):
            lines = (out / name).read_text(encoding="utf-8").splitlines()
            assert len(lines) == 1, name

    def test_round_trip(self, tmp_path, wav_dir):
        records = make_records(40)
        out = tmp_path / "data"
        paths = {"m01": wav_dir / "m01.wav", "m02": wav_dir / "m02.wav"}
        emit_manifests(records, out, paths)
        back = parse_manifests(out)
        assert back == sorted(records, key=lambda r: r.utt_id)

    def test_sorted_output(self, tmp_path, wav_dir):
        records = list(reversed(make_records(10)))
        out = tmp_path / "data"
        emit_manifests(records, out, {"m01": wav_dir / "m01.wav", "m02": wav_dir / "m02.wav"})
        for name in ("segments", "text", "utt2spk"):
            lines = (out / name).read_text(encoding="utf-8").splitlines()
            assert lines == sorted(lines)

    def test_unresolved_audio(self, tmp_path):
        records = make_records(2, rec_ids=("m01",))
        with pytest.raises(UnresolvedAudio):
            emit_manifests(records, tmp_path / "data", {})

    def test_unlabeled_rejected_unless_allowed(self, tmp_path, wav_dir):
        records = make_records(3, rec_ids=("m01",), labeled=False)
        paths = {"m01": wav_dir / "m01.wav"}
        with pytest.raises(UnlabeledEmotion):
            emit_manifests(records, tmp_path / "a", paths)
        emit_manifests(records, tmp_path / "b", paths, allow_unlabeled=True)
        lines = (tmp_path / "b" / "utt2emotion").read_text().splitlines()
        assert all(line.endswith(" neutral") for line in lines)

    def test_every_utt_has_one_emotion(self, tmp_path, wav_dir):
        records = make_records(25)
        out = tmp_path / "data"
        emit_manifests(records, out, {"m01": wav_dir / "m01.wav", "m02": wav_dir / "m02.wav"})
        lines = (out / "utt2emotion").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 25
        valid = {lab.value for lab in EmotionLabel}
        assert all(line.split(" ", 1)[1] in valid for line in lines)

    def test_duplicate_ids_rejected(self, tmp_path, wav_dir):
        records = make_records(2, rec_ids=("m01",))
        records.append(records[0])
        with pytest.raises(DuplicateUttId):
            emit_manifests(records, tmp_path / "data", {"m01": wav_dir / "m01.wav"})


class TestValidateManifest:
    def emit(self, tmp_path, wav_dir, count=12):
        records = make_records(count)
        out = tmp_path / "data"
        emit_manifests(records, out, {"m01": wav_dir / "m01.wav", "m02": wav_dir / "m02.wav"})
        return out

    def test_emitted_manifest_valid(self, tmp_path, wav_dir):
        out = self.emit(tmp_path, wav_dir)
        assert validate_manifest(out) == []

    def test_segment_beyond_duration_flagged(self, tmp_path, wav_dir):
        out = self.emit(tmp_path, wav_dir)
        seg = out / "segments"
        lines = seg.read_text().splitlines()
        utt, rec, start, _ = lines[0].split()
        lines[0] = f"{utt} {rec} {start} 99.000"
        seg.write_text("".join(l + "\n" for l in lines), encoding="utf-8")
        kinds = {issue.kind for issue in validate_manifest(out)}
        assert "SegmentOutOfRange" in kinds

    def test_missing_entry_flagged(self, tmp_path, wav_dir):
        out = self.emit(tmp_path, wav_dir)
        text = out / "text"
        lines = text.read_text().splitlines()
        text.write_text("".join(l + "\n" for l in lines[1:]), encoding="utf-8")
        issues = validate_manifest(out)
        assert any(i.kind == "MissingEntry" and "text" in i.message for i in issues)

    def test_duplicate_id_flagged(self, tmp_path, wav_dir):
        out = self.emit(tmp_path, wav_dir)
        seg = out / "segments"
        lines = seg.read_text().splitlines()
        seg.write_text("".join(l + "\n" for l in lines + [lines[0]]), encoding="utf-8")
        kinds = {issue.kind for issue in validate_manifest(out)}
        assert "DuplicateId" in kinds


class TestRecordsTsv:
    def test_round_trip(self, tmp_path):
        records = make_records(30)
        path = tmp_path / "records.tsv"
        write_records_tsv(records, path)
        assert read_records_tsv(path) == records

    def test_unlabeled_and_scores(self, tmp_path):
        rec = UtteranceRecord("m_0", "m", 0.0, 1.0, "نص", "نص", None, -1.25, "spk")
        path = tmp_path / "r.tsv"
        write_records_tsv([rec], path)
        back = read_records_tsv(path)[0]
        assert back.emotion is None
        assert back.align_score == pytest.approx(-1.25)

    def test_bad_emotion_rejected(self, tmp_path):
        path = tmp_path / "r.tsv"
        path.write_text("m_0\tm\t0.000\t1.000\tspk\tangry\t-\tx\ty\n", encoding="utf-8")
        with pytest.raises(UnknownLabel):
            read_records_tsv(path)


class TestRecordInvariants:
    def test_prefix_enforced(self):
        with pytest.raises(ValueError):
            UtteranceRecord("x_0", "m01", 0.0, 1.0, "a", "a")

    def test_span_enforced(self):
        with pytest.raises(ValueError):
            UtteranceRecord("m01_0", "m01", 1.0, 1.0, "a", "a")

    def test_positive_score_rejected(self):
        with pytest.raises(ValueError):
            UtteranceRecord("m01_0", "m01", 0.0, 1.0, "a", "a", align_score=0.5)
