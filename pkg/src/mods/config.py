"""Run configuration merged from defaults, config file, environment, flags.

The config file is INI-style key/value sections (see `_SECTION_OF` for the
layout). Environment variables use the flat `MODS_<FIELD>` form. Precedence
is flags > environment > file > defaults; every resolved value is validated
against its module's invariants before any work starts.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping

from .descriptor import load_lexicon
from .errors import FormatError
from .matcher import MatchConfig
from .segmenter import SegmenterConfig

_SECTION_OF = {
    "seed": "run",
    "jobs": "run",
    "gamma": "match",
    "region_lines": "match",
    "region_stride": "match",
    "stopword_tau": "match",
    "ann_mode": "match",
    "ann_leaf_size": "match",
    "ann_max_visited_leaves": "match",
    "lexicon_path": "match",
    "small_factor": "segment",
    "large_factor": "segment",
    "cost_threshold": "segment",
    "gap_factors": "segment",
    "page_scale_factor": "segment",
    "binarize_threshold": "segment",
    "noise": "embed",
    "dim": "embed",
}

ENV_PREFIX = "MODS_"


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    jobs: int = 0  # 0 = one worker per logical CPU
    gamma: float = 0.6
    region_lines: int = 3
    region_stride: int = 1
    stopword_tau: float = 0.7
    ann_mode: str = "exact"
    ann_leaf_size: int = 16
    ann_max_visited_leaves: int = 64
    lexicon_path: str | None = None
    small_factor: float = 0.4
    large_factor: float = 2.0
    cost_threshold: float = 1.5
    gap_factors: tuple[float, ...] = (1.0, 1.5, 2.0)
    page_scale_factor: float = 3.0
    binarize_threshold: int | None = None
    noise: float = 0.0
    dim: int = 1024

    def match_config(self) -> MatchConfig:
        lexicon = load_lexicon(self.lexicon_path) if self.lexicon_path else None
        return MatchConfig(
            gamma=self.gamma,
            region_lines=self.region_lines,
            region_stride=self.region_stride,
            stopword_tau=self.stopword_tau,
            ann_mode=self.ann_mode,
            ann_leaf_size=self.ann_leaf_size,
            ann_max_visited_leaves=self.ann_max_visited_leaves,
            stopword_lexicon=lexicon,
        )

    def segmenter_config(self) -> SegmenterConfig:
        return SegmenterConfig(
            small_factor=self.small_factor,
            large_factor=self.large_factor,
            cost_threshold=self.cost_threshold,
            gap_factors=self.gap_factors,
            page_scale_factor=self.page_scale_factor,
            binarize_threshold=self.binarize_threshold,
        )

    def validate(self) -> "RunConfig":
        """Build every module config so their invariants run up front."""
        self.match_config()
        self.segmenter_config()
        if self.seed < 0:
            raise FormatError("seed must be >= 0")
        if self.jobs < 0:
            raise FormatError("jobs must be >= 0")
        return self

    def echo_lines(self) -> list[str]:
        out = []
        for f in sorted(fields(self), key=lambda f: f.name):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(f"{v:g}" for v in value)
            out.append(f"{f.name}={value}")
        return out


def _coerce(name: str, raw: str):
    raw = raw.strip()
    kind = RunConfig.__dataclass_fields__[name].type
    if name in ("lexicon_path",):
        return raw or None
    if name == "binarize_threshold":
        return int(raw) if raw and raw.lower() != "none" else None
    if name == "gap_factors":
        try:
            parts = tuple(float(p) for p in raw.split(",") if p.strip())
        except ValueError as exc:
            raise FormatError(f"config {name}: bad float list {raw!r}") from exc
        return parts
    if name == "ann_mode":
        return raw
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError as exc:
        raise FormatError(f"config {name}: bad value {raw!r}") from exc
    return raw


def resolve(
    config_path: str | Path | None = None,
    env: Mapping[str, str] | None = None,
    overrides: Mapping[str, object] | None = None,
) -> RunConfig:
    """Merge file, environment, and flag overrides onto the defaults."""
    values: dict[str, object] = {}
    if config_path is not None:
        parser = configparser.ConfigParser()
        path = Path(config_path)
        if not path.exists():
            raise FileNotFoundError(str(path))
        try:
            parser.read_string(path.read_text(encoding="utf-8"), source=str(path))
        except configparser.Error as exc:
            raise FormatError(f"{path.name}: {exc}") from exc
        known = {(section, key) for key, section in _SECTION_OF.items()}
        for section in parser.sections():
            for key in parser[section]:
                if (section, key) not in known:
                    raise FormatError(f"{path.name}: unknown setting [{section}] {key}")
                values[key] = _coerce(key, parser[section][key])
    if env:
        for name in _SECTION_OF:
            raw = env.get(ENV_PREFIX + name.upper())
            if raw is not None:
                values[name] = _coerce(name, raw)
    if overrides:
        for name, value in overrides.items():
            if value is not None:
                values[name] = value
    return RunConfig(**values).validate()
