"""Pipeline configuration: one JSON file covering every stage.

The file path comes from --config or the FOOCTTS_CONFIG environment
variable; absent both, built-in defaults apply. Unknown keys are
rejected so typos fail loudly instead of silently using defaults.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Union

from .align import STAY_MODES, DEFAULT_SCORE_WINDOW
from .audio import CANONICAL_RATE
from .corpus import SplitSpec
from .serve import ConfigError, GatewayConfig, StubConfig
from .textproc import VowelizerConfig
from .vad import VadConfig

ENV_VAR = "FOOCTTS_CONFIG"


@dataclass
class AlignConfig:
    stay: str = "blank_or_repeat"
    min_score: Optional[float] = None
    window: int = DEFAULT_SCORE_WINDOW

    def __post_init__(self):
        if self.stay not in STAY_MODES:
            raise ConfigError(f"align.stay must be one of {STAY_MODES}")
        if self.window < 1:
            raise ConfigError("align.window must be at least 1")


@dataclass
class PipelineConfig:
    sample_rate: int = CANONICAL_RATE
    vad: VadConfig = field(default_factory=VadConfig)
    align: AlignConfig = field(default_factory=AlignConfig)
    vowelizer: VowelizerConfig = field(default_factory=VowelizerConfig)
    split: SplitSpec = field(default_factory=SplitSpec)
    serve: GatewayConfig = field(default_factory=GatewayConfig)


def _build(cls, data: dict, context: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{context}: expected an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{context}: unknown keys {unknown}")
    kwargs = dict(data)
    if cls is VadConfig and "zcr_speech_range" in kwargs:
        kwargs["zcr_speech_range"] = tuple(kwargs["zcr_speech_range"])
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{context}: {exc}") from exc


def config_from_dict(data: dict) -> PipelineConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    known = {f.name for f in fields(PipelineConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"config: unknown keys {unknown}")
    serve_data = dict(data.get("serve", {}))
    if "stub" in serve_data:
        serve_data["stub"] = _build(StubConfig, serve_data["stub"], "serve.stub")
    return PipelineConfig(
        sample_rate=int(data.get("sample_rate", CANONICAL_RATE)),
        vad=_build(VadConfig, data.get("vad", {}), "vad"),
        align=_build(AlignConfig, data.get("align", {}), "align"),
        vowelizer=_build(VowelizerConfig, data.get("vowelizer", {}), "vowelizer"),
        split=_build(SplitSpec, data.get("split", {}), "split"),
        serve=_build(GatewayConfig, serve_data, "serve"),
    )


def load_config(path: Optional[Union[str, Path]] = None) -> PipelineConfig:
    """Load the pipeline config from path, $FOOCTTS_CONFIG, or defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is None:
        return PipelineConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return config_from_dict(data)
