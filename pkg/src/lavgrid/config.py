"""Harness configuration and its INI-style file format."""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Union

from .taskgen import TASK_SHAPES, GenConfig
from .vision import NoiseConfig
from .worldsim import ObservationConfig

NAVIGATORS = ("dfs", "expert")
PLAN_SELECTION = ("disambiguate", "value", "first")

DEFAULT_GEN = GenConfig(paraphrase_level="distractor")
DEFAULT_NOISE = NoiseConfig(mislabel_prob=0.05, miss_prob=0.2, depth_sigma=0.3, seed=0)


@dataclass(frozen=True)
class HarnessConfig:
    gen: GenConfig = DEFAULT_GEN
    noise: NoiseConfig = DEFAULT_NOISE
    observation: ObservationConfig = ObservationConfig()
    oracle_language: bool = False
    oracle_vision: bool = False
    navigator: str = "dfs"
    plan_selection: str = "disambiguate"
    failure_cap: int = 10
    budget_factor: int = 20
    lexicon: Optional[str] = None

    def __post_init__(self):
        if self.navigator not in NAVIGATORS:
            raise ValueError(f"navigator must be one of {NAVIGATORS}")
        if self.plan_selection not in PLAN_SELECTION:
            raise ValueError(f"plan_selection must be one of {PLAN_SELECTION}")
        if self.failure_cap < 1 or self.budget_factor < 1:
            raise ValueError("failure_cap and budget_factor must be positive")

    def budget(self, width: int, height: int) -> int:
        return self.budget_factor * (width + height)

    def with_oracles(self, language: bool, vision: bool) -> "HarnessConfig":
        return replace(self, oracle_language=language, oracle_vision=vision)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gen"]["task_weights"] = dict(self.gen.task_weights)
        return d

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _coerce(cls, section: configparser.SectionProxy, base):
    kwargs = {}
    for f in fields(cls):
        if f.name not in section:
            continue
        raw = section[f.name].strip()
        current = getattr(base, f.name)
        if f.name == "task_weights":
            pairs = [p.split(":") for p in raw.split(",") if p.strip()]
            kwargs[f.name] = tuple((k.strip(), float(v)) for k, v in pairs)
        elif isinstance(current, bool):
            kwargs[f.name] = section.getboolean(f.name)
        elif isinstance(current, int):
            kwargs[f.name] = int(raw)
        elif isinstance(current, float):
            kwargs[f.name] = float(raw)
        else:
            kwargs[f.name] = raw or None
    return replace(base, **kwargs)


def load_config(path: Union[str, Path, None] = None) -> HarnessConfig:
    """Read a config file; missing keys keep their defaults."""
    base = HarnessConfig()
    if path is None:
        return base
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    known = {"gen", "noise", "observation", "run"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    gen = _coerce(GenConfig, parser["gen"], base.gen) if "gen" in parser else base.gen
    noise = _coerce(NoiseConfig, parser["noise"], base.noise) if "noise" in parser else base.noise
    obs = (_coerce(ObservationConfig, parser["observation"], base.observation)
           if "observation" in parser else base.observation)
    cfg = replace(base, gen=gen, noise=noise, observation=obs)
    if "run" in parser:
        cfg = _coerce(HarnessConfig, parser["run"], cfg)
    return cfg


def dump_config(cfg: HarnessConfig) -> str:
    g, n, o = cfg.gen, cfg.noise, cfg.observation
    weights = ", ".join(f"{k}:{v:g}" for k, v in g.task_weights)
    return "\n".join([
        "[gen]",
        f"min_size = {g.min_size}",
        f"max_size = {g.max_size}",
        f"min_objects = {g.min_objects}",
        f"max_objects = {g.max_objects}",
        f"obstacle_density = {g.obstacle_density}",
        f"paraphrase_level = {g.paraphrase_level}",
        f"task_weights = {weights}",
        "",
        "[noise]",
        f"mislabel_prob = {n.mislabel_prob}",
        f"miss_prob = {n.miss_prob}",
        f"depth_sigma = {n.depth_sigma}",
        f"seed = {n.seed}",
        "",
        "[observation]",
        f"num_rays = {o.num_rays}",
        f"fov_deg = {o.fov_deg}",
        f"max_depth = {o.max_depth}",
        "",
        "[run]",
        f"oracle_language = {str(cfg.oracle_language).lower()}",
        f"oracle_vision = {str(cfg.oracle_vision).lower()}",
        f"navigator = {cfg.navigator}",
        f"plan_selection = {cfg.plan_selection}",
        f"failure_cap = {cfg.failure_cap}",
        f"budget_factor = {cfg.budget_factor}",
        f"lexicon = {cfg.lexicon or ''}",
        "",
    ])


def parse_seed_range(text: str) -> range:
    """``"A..B"`` (inclusive) or a single integer."""
    if ".." in text:
        a, b = text.split("..", 1)
        lo, hi = int(a), int(b)
        if hi < lo:
            raise ValueError(f"empty seed range {text!r}")
        return range(lo, hi + 1)
    n = int(text)
    return range(n, n + 1)
