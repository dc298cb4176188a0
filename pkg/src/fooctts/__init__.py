"""FOOCTTS: commentator speech corpus tooling and a synthesis gateway.

Pipeline stages live in their own modules: audio (WAV I/O, resampling,
noise mixing), features (energy/zcr/flatness/F0 tracks), vad (four-class
segmentation), align (forced alignment against CTC posteriors), textproc
(normalize/transliterate/vowelize), corpus (records, splits, manifests),
serve (the HTTP gateway), and cli (the command-line surface).
"""

__version__ = "0.1.0"

from .audio import AudioBuffer, CANONICAL_RATE, mix_noise, read_wav, resample, write_wav
from .features import F0Track, FeatureTrack, estimate_f0, frame_features
from .vad import Segment, SegmentLabel, VadConfig, classify_frames, cut_audio, filter_speech, smooth_and_segment

__all__ = [
    "AudioBuffer",
    "CANONICAL_RATE",
    "F0Track",
    "FeatureTrack",
    "Segment",
    "SegmentLabel",
    "VadConfig",
    "classify_frames",
    "cut_audio",
    "estimate_f0",
    "filter_speech",
    "frame_features",
    "mix_noise",
    "read_wav",
    "resample",
    "smooth_and_segment",
    "write_wav",
    "__version__",
]
