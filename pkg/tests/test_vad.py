"""Four-class segmentation: cascade, smoothing, filtering, cutting."""

import numpy as np
import pytest

from fooctts.audio import AudioBuffer
from fooctts.features import frame_features
from fooctts.vad import (
    EmptyTrack,
    Segment,
    SegmentLabel,
    SegmentOutOfRange,
    VadConfig,
    classify_frames,
    cut_audio,
    filter_speech,
    format_segments,
    parse_segments,
    smooth_and_segment,
)

from conftest import RATE, make_silence, make_speech_proxy, make_tone, make_white_noise

S, N, M, Q = (
    SegmentLabel.SPEECH,
    SegmentLabel.NOISE,
    SegmentLabel.MUSIC,
    SegmentLabel.NO_ENERGY,
)


def majority(labels):
    values = [lab.value for lab in labels]
    return max(set(values), key=values.count)


class TestClassifyFrames:
    def test_silence_all_no_energy(self):
        track = frame_features(make_silence())
        labels = classify_frames(track, VadConfig())
        assert all(lab is Q for lab in labels)

    def test_white_noise_majority_noise(self):
        track = frame_features(make_white_noise(seed=42))
        labels = classify_frames(track, VadConfig())
        assert majority(labels) == "noise"

    def test_speech_proxy_majority_speech(self):
        track = frame_features(make_speech_proxy())
        labels = classify_frames(track, VadConfig())
        assert majority(labels) == "speech"

    def test_steady_tone_is_music(self):
        track = frame_features(make_tone(440.0))
        labels = classify_frames(track, VadConfig())
        assert majority(labels) == "music"

    def test_empty_track_rejected(self):
        track = frame_features(make_silence(0.2))
        empty = type(track)(
            frame_len_ms=track.frame_len_ms,
            hop_ms=track.hop_ms,
            energy_db=np.zeros(0),
            zcr=np.zeros(0),
            spectral_flatness=np.zeros(0),
        )
        with pytest.raises(EmptyTrack):
            classify_frames(empty, VadConfig())

    def test_gain_invariance_above_floor(self):
        cfg = VadConfig()
        buf = make_speech_proxy(seconds=1.5)
        louder = AudioBuffer(samples=np.clip(buf.samples * 2.0, -1, 1), sample_rate=RATE)
        base_track = frame_features(buf)
        a = classify_frames(base_track, cfg)
        b = classify_frames(frame_features(louder), cfg)
        for i, (x, y) in enumerate(zip(a, b)):
            if base_track.energy_db[i] >= cfg.energy_floor_db + 6.0:
                assert x == y


class TestSmoothAndSegment:
    def test_uniform_single_segment(self):
        segments = smooth_and_segment([S] * 100, VadConfig(), duration_s=1.015)
        assert len(segments) == 1
        assert segments[0].start_s == 0.0
        assert segments[0].end_s == 1.015
        assert segments[0].label is S

    def test_short_run_absorbed(self):
        labels = [S] * 50 + [N] * 2 + [S] * 50
        segments = smooth_and_segment(labels, VadConfig())
        assert len(segments) == 1
        assert segments[0].label is S

    def test_even_split_boundary(self):
        labels = [S] * 50 + [N] * 50
        segments = smooth_and_segment(labels, VadConfig())
        assert len(segments) == 2
        assert segments[0].label is S and segments[1].label is N
        assert abs(segments[0].end_s - 0.5) <= 0.010 + 1e-9

    def test_tiling_no_gaps(self):
        rng = np.random.default_rng(8)
        all_labels = [S, N, M, Q]
        for _ in range(25):
            labels = [all_labels[i] for i in rng.integers(0, 4, size=rng.integers(5, 300))]
            segments = smooth_and_segment(labels, VadConfig())
            assert segments[0].start_s == 0.0
            for prev, cur in zip(segments, segments[1:]):
                assert abs(prev.end_s - cur.start_s) < 1e-9
            expected_duration = (len(labels) - 1) * 0.010 + 0.025
            assert abs(segments[-1].end_s - expected_duration) < 1e-9

    def test_empty_rejected(self):
        with pytest.raises(EmptyTrack):
            smooth_and_segment([], VadConfig())


class TestFilterSpeech:
    def test_keeps_only_speech(self):
        segments = [
            Segment(0.0, 1.0, Q),
            Segment(1.0, 2.0, S),
            Segment(2.0, 3.0, M),
            Segment(3.0, 4.0, N),
            Segment(4.0, 5.0, S),
        ]
        kept = filter_speech(segments)
        assert [seg.start_s for seg in kept] == [1.0, 4.0]
        assert all(seg.label is S for seg in kept)
        assert sum(s.duration_s for s in kept) <= 5.0

    def test_no_speech_empty(self):
        assert filter_speech([Segment(0.0, 2.0, N)]) == []

    def test_all_speech_identity(self):
        segments = [Segment(0.0, 1.0, S), Segment(1.0, 2.0, S)]
        assert filter_speech(segments) == segments


class TestCutAudio:
    def test_whole_buffer(self):
        buf = make_tone(100.0)
        clips = cut_audio(buf, [Segment(0.0, buf.duration_s, S)])
        assert len(clips) == 1
        assert np.array_equal(clips[0].samples, buf.samples)

    def test_one_second_clip(self):
        buf = make_tone(100.0, seconds=2.0)
        clips = cut_audio(buf, [Segment(0.0, 1.0, S)])
        assert len(clips[0]) == 22050

    def test_adjacent_segments_concatenate_exactly(self):
        buf = make_white_noise(seconds=2.0, seed=1)
        cut_at = 0.7771
        clips = cut_audio(buf, [Segment(0.0, cut_at, S), Segment(cut_at, 2.0, S)])
        joined = np.concatenate([c.samples for c in clips])
        assert np.array_equal(joined, buf.samples)

    def test_out_of_range(self):
        buf = make_tone(100.0)
        with pytest.raises(SegmentOutOfRange):
            cut_audio(buf, [Segment(0.5, 1.5, S)])


class TestSerialization:
    def test_round_trip(self):
        segments = [Segment(0.0, 1.234, Q), Segment(1.234, 2.0, S)]
        text = format_segments(segments)
        assert text == "0.000\t1.234\tnoEnergy\n1.234\t2.000\tspeech\n"
        assert parse_segments(text) == segments

    def test_bad_label_rejected(self):
        with pytest.raises(ValueError):
            parse_segments("0.000\t1.000\tshouting\n")


class TestFixtureEndToEnd:
    def test_three_part_fixture(self):
        rate = RATE
        buf = AudioBuffer(
            samples=np.concatenate(
                [
                    make_silence(1.0).samples,
                    make_speech_proxy(1.0).samples,
                    make_white_noise(1.0, seed=42).samples,
                ]
            ),
            sample_rate=rate,
        )
        cfg = VadConfig()
        track = frame_features(buf)
        labels = classify_frames(track, cfg)
        segments = smooth_and_segment(
            labels, cfg, track.frame_len_ms, track.hop_ms, duration_s=buf.duration_s
        )
        assert [seg.label for seg in segments] == [Q, S, N]
        assert abs(segments[0].end_s - 1.0) <= 0.05
        assert abs(segments[1].end_s - 2.0) <= 0.05
        speech_only = filter_speech(segments)
        assert len(speech_only) == 1
        assert speech_only[0] == segments[1]
