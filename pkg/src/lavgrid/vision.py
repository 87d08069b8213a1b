"""Vision module: noisy perception over rendered rays and target localisation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .worldsim import (AgentState, Cell, ObjectType, Observation, ObservationConfig,
                       Ray, ray_lateral_offsets, to_world)

ALL_TYPES = tuple(ObjectType)


@dataclass(frozen=True)
class NoiseConfig:
    mislabel_prob: float = 0.0
    miss_prob: float = 0.0
    depth_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("mislabel_prob", "miss_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.depth_sigma < 0:
            raise ValueError("depth_sigma must be non-negative")

    @property
    def is_oracle(self) -> bool:
        return self.mislabel_prob == 0 and self.miss_prob == 0 and self.depth_sigma == 0


ORACLE = NoiseConfig()


@dataclass(frozen=True)
class PerceptionFrame:
    rays: tuple[Ray, ...]
    config: ObservationConfig
    observed: frozenset = frozenset()


@dataclass(frozen=True)
class TargetEstimate:
    target_type: ObjectType
    relative: Optional[Cell]  # world-axis offset from the agent; None when absent
    confidence: float = 1.0

    @property
    def present(self) -> bool:
        return self.relative is not None


def perceive(obs: Observation, noise: NoiseConfig = ORACLE,
             rng: Optional[np.random.Generator] = None,
             observed: frozenset = frozenset()) -> PerceptionFrame:
    """Pass ground-truth rays through the noise channel.

    Per ray, in order: miss (label dropped), mislabel (non-empty label swapped
    for a uniformly drawn different type), then rounded Gaussian depth jitter
    clamped to ``[1, max_depth]``.  The obstacle flag is recomputed from the
    final depth.
    """
    cfg = obs.config
    if noise.is_oracle:
        rays = obs.rays
    else:
        if rng is None:
            rng = np.random.default_rng(noise.seed)
        n = len(obs.rays)
        u_miss = rng.random(n)
        u_mislabel = rng.random(n)
        swap = rng.integers(0, len(ALL_TYPES) - 1, size=n)
        jitter = np.rint(rng.normal(0.0, 1.0, size=n) * noise.depth_sigma).astype(int)
        rays = []
        for i, ray in enumerate(obs.rays):
            label = ray.label
            if label is not None and u_miss[i] < noise.miss_prob:
                label = None
            if label is not None and u_mislabel[i] < noise.mislabel_prob:
                others = [t for t in ALL_TYPES if t != label]
                label = others[swap[i]]
            depth = min(max(ray.depth + int(jitter[i]), 1), cfg.max_depth)
            rays.append(Ray(depth, label, depth == 1))
        rays = tuple(rays)
    seen = observed | {r.label for r in rays if r.label is not None}
    return PerceptionFrame(rays, cfg, frozenset(seen))


def ray_cell(frame: PerceptionFrame, index: int, depth: int) -> tuple[int, int]:
    """Agent-frame (forward, right) cell at which ray ``index`` ends at ``depth``."""
    return depth, ray_lateral_offsets(frame.config)[index][depth - 1]


def locate_target(frame: PerceptionFrame, target: ObjectType,
                  agent: AgentState) -> TargetEstimate:
    """Estimate where the nearest visible ``target`` sits relative to the agent.

    The returned offset is in world axes, centred on the agent, so the
    Chebyshev size of the offset never exceeds the ray's depth.
    """
    center = (len(frame.rays) - 1) / 2
    best = None
    for i, ray in enumerate(frame.rays):
        if ray.label != target:
            continue
        key = (ray.depth, abs(i - center), i)
        if best is None or key < best[0]:
            best = (key, i, ray.depth)
    if best is None:
        return TargetEstimate(target, None, 1.0)
    _, index, depth = best
    chosen = ray_cell(frame, index, depth)
    conflicts = sum(1 for i, r in enumerate(frame.rays)
                    if r.label == target and ray_cell(frame, i, r.depth) != chosen)
    rel = to_world(agent.heading, *chosen)
    return TargetEstimate(target, rel, 1.0 / (1 + conflicts))


class VisionModule:
    """Per-episode perception: owns the noise RNG stream and the set of seen types."""

    def __init__(self, noise: NoiseConfig = ORACLE, stream: int = 0):
        self.noise = noise
        self.rng = np.random.default_rng([noise.seed, stream])
        self.observed: frozenset = frozenset()

    def __call__(self, obs: Observation) -> PerceptionFrame:
        frame = perceive(obs, self.noise, self.rng, self.observed)
        self.observed = frame.observed
        return frame
