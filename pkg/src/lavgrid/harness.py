"""Episode runner, metrics, oracle ablation, and trace persistence."""

from __future__ import annotations

import json
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .action import (ExpertFailed, MissingHeldObject, NavState, Stuck, execute_macro,
                     expert_plan_actions, in_interaction_range, shortest_path, navigate_step)
from .config import HarnessConfig
from .lang import (LanguageError, Lexicon, Plan, default_lexicon, disambiguate,
                   parse_instruction, rank_plans_by_value)
from .taskgen import (Instruction, generate_instruction, generate_scene, generate_task,
                      ground_truth_plan)
from .vision import ORACLE, VisionModule, locate_target
from .worldsim import (Scene, TaskSpec, action_from_str, action_to_str,
                       check_goal_conditions, render_observation, step)

ABLATION_ROWS = (
    ("L & V Oracles", True, True),
    ("V Oracle", False, True),
    ("L Oracle", True, False),
    ("LAV", False, False),
)


@dataclass(frozen=True)
class EpisodeSetup:
    seed: int
    scene: Scene
    task: TaskSpec
    instruction: Instruction


def make_setup(seed: int, config: HarnessConfig) -> EpisodeSetup:
    scene = generate_scene(seed, config.gen)
    task = generate_task(seed, scene, config.gen)
    return EpisodeSetup(seed, scene, task, generate_instruction(task, seed, config.gen))


def seed_pool(seed: int) -> str:
    return "seen" if seed % 2 == 0 else "unseen"


@dataclass
class StepRecord:
    action: str
    result: str
    x: int
    y: int
    heading: str


@dataclass
class EpisodeTrace:
    seed: int
    instruction: str
    plan: Optional[str]
    shape: str
    expert_path_length: int
    budget: int
    fingerprint: str
    steps: list = field(default_factory=list)
    outcome: str = "Failure"
    reason: str = ""
    goal_fraction: float = 0.0

    @property
    def steps_taken(self) -> int:
        return len(self.steps)

    @property
    def success(self) -> bool:
        return self.outcome == "Success"

    @property
    def pool(self) -> str:
        return seed_pool(self.seed)

    def to_lines(self) -> list[str]:
        head = {"record": "episode", "seed": self.seed, "pool": self.pool,
                "instruction": self.instruction, "plan": self.plan, "shape": self.shape,
                "expert_path_length": self.expert_path_length, "budget": self.budget,
                "config": self.fingerprint}
        lines = [json.dumps(head)]
        for t, s in enumerate(self.steps):
            lines.append(json.dumps({"record": "step", "t": t, "action": s.action,
                                     "result": s.result, "x": s.x, "y": s.y,
                                     "heading": s.heading}))
        lines.append(json.dumps({"record": "outcome", "outcome": self.outcome,
                                 "reason": self.reason, "steps_taken": self.steps_taken,
                                 "goal_fraction": self.goal_fraction}))
        return lines

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "EpisodeTrace":
        trace = None
        for line in lines:
            if not line.strip():
                continue
            rec = json.loads(line)
            kind = rec.pop("record")
            if kind == "episode":
                trace = cls(rec["seed"], rec["instruction"], rec["plan"], rec["shape"],
                            rec["expert_path_length"], rec["budget"], rec["config"])
            elif kind == "step":
                trace.steps.append(StepRecord(rec["action"], rec["result"], rec["x"],
                                              rec["y"], rec["heading"]))
            elif kind == "outcome":
                trace.outcome = rec["outcome"]
                trace.reason = rec["reason"]
                trace.goal_fraction = rec["goal_fraction"]
        if trace is None:
            raise ValueError("trace has no episode record")
        return trace


class _EpisodeOver(Exception):
    def __init__(self, outcome: str, reason: str):
        self.outcome = outcome
        self.reason = reason


class _Episode:
    """Mutable per-episode context: scene, perception stream and trace buffer."""

    def __init__(self, setup: EpisodeSetup, config: HarnessConfig, trace: EpisodeTrace):
        self.config = config
        self.scene = setup.scene
        self.task = setup.task
        self.trace = trace
        self.failures = 0
        self.nav = NavState()
        noise = ORACLE if config.oracle_vision else config.noise
        self.vision = VisionModule(noise, stream=setup.seed)
        self.frame = self.look()

    def look(self):
        return self.vision(render_observation(self.scene, self.config.observation))

    def act(self, action) -> bool:
        self.scene, result = step(self.scene, action)
        a = self.scene.agent
        self.trace.steps.append(StepRecord(action_to_str(action), str(result),
                                           a.cell[0], a.cell[1], a.heading.value))
        if result.ok and check_goal_conditions(self.scene, self.task) == 1.0:
            raise _EpisodeOver("Success", "")
        if len(self.trace.steps) >= self.trace.budget:
            raise _EpisodeOver("Failure", "StepBudget")
        self.frame = self.look()
        return result.ok

    def interact(self, actions) -> bool:
        for action in actions:
            if not self.act(action):
                self.failures += 1
                if self.failures >= self.config.failure_cap:
                    raise _EpisodeOver("Failure", "FailureCap")
                return False
        return True

    def run_step_dfs(self, subtask, otype) -> None:
        nav = self.nav
        nav.retarget()
        while True:
            agent = self.scene.agent
            est = locate_target(self.frame, otype, agent)
            if in_interaction_range(est):
                cell = (agent.cell[0] + est.relative[0], agent.cell[1] + est.relative[1])
                obj = self.scene.occupancy().get(cell)
                macro = execute_macro(subtask, obj.id if obj is not None else -1,
                                      agent.inventory)
                if self.interact(macro):
                    return
                continue
            nav.current_target = est
            self.act(navigate_step(nav, self.frame, agent))

    def run_plan_expert(self, steps) -> None:
        steps = list(steps)
        i = 0
        while i < len(steps):
            try:
                actions = expert_plan_actions(self.scene, steps[i:])[0]
            except ExpertFailed:
                # the rest of the plan cannot all run; just attempt this step
                subtask, otype = steps[i]
                try:
                    path, target_id = shortest_path(self.scene, otype)
                except ExpertFailed:
                    raise _EpisodeOver("Failure", "NoTarget")
                actions = path + execute_macro(subtask, target_id, self.scene.agent.inventory)
            if self.interact(actions):
                i += 1


def select_plan(candidates: Sequence[Plan], frame, config: HarnessConfig, scene: Scene) -> Plan:
    if config.plan_selection == "first" or len(candidates) == 1:
        return candidates[0]
    if config.plan_selection == "value":
        return rank_plans_by_value(candidates, frame, 2 * (scene.width + scene.height))
    return disambiguate(candidates, frame)


def run_episode(seed: int, config: HarnessConfig = HarnessConfig(),
                setup: Optional[EpisodeSetup] = None,
                lexicon: Optional[Lexicon] = None) -> EpisodeTrace:
    """Run one instruction-following episode end to end.

    Every failure mode ends up as a ``Failure`` outcome with a reason string.
    """
    setup = setup or make_setup(seed, config)
    scene = setup.scene
    trace = EpisodeTrace(seed, setup.instruction.text, None, setup.task.shape,
                         setup.task.expert_path_length,
                         config.budget(scene.width, scene.height), config.fingerprint())
    if lexicon is None:
        lexicon = Lexicon.load(config.lexicon) if config.lexicon else default_lexicon()
    try:
        if config.oracle_language:
            candidates = [ground_truth_plan(setup.task)]
        else:
            candidates = parse_instruction(setup.instruction, lexicon)
    except LanguageError as exc:
        trace.reason = exc.reason
        trace.goal_fraction = check_goal_conditions(scene, setup.task)
        return trace

    ep = _Episode(setup, config, trace)
    plan = select_plan(candidates, ep.frame, config, scene)
    trace.plan = str(plan)
    try:
        if config.navigator == "expert":
            ep.run_plan_expert(plan.steps)
        else:
            for subtask, otype in plan.steps:
                ep.run_step_dfs(subtask, otype)
        raise _EpisodeOver("Failure", "PlanExhausted")
    except _EpisodeOver as end:
        trace.outcome, trace.reason = end.outcome, end.reason
    except Stuck:
        trace.reason = "Stuck"
    except MissingHeldObject:
        trace.reason = "MissingHeldObject"
    trace.goal_fraction = check_goal_conditions(ep.scene, setup.task)
    return trace


def replay_trace(trace: EpisodeTrace, config: HarnessConfig = HarnessConfig()) -> EpisodeTrace:
    """Re-simulate the recorded actions from the seed's initial scene.

    Returns a trace whose step records and goal fraction come from the
    re-simulation; the outcome is ``Success`` exactly when every goal holds.
    """
    setup = make_setup(trace.seed, config)
    scene = setup.scene
    out = EpisodeTrace(trace.seed, setup.instruction.text, trace.plan, setup.task.shape,
                       setup.task.expert_path_length, trace.budget, config.fingerprint())
    for rec in trace.steps:
        scene, result = step(scene, action_from_str(rec.action))
        a = scene.agent
        out.steps.append(StepRecord(rec.action, str(result), a.cell[0], a.cell[1],
                                    a.heading.value))
    out.goal_fraction = check_goal_conditions(scene, setup.task)
    out.outcome = "Success" if out.goal_fraction == 1.0 else "Failure"
    out.reason = trace.reason
    return out


# --- metrics -------------------------------------------------------------------

def path_weighted(score: float, length: int, expert_length: int) -> float:
    if expert_length < 1:
        raise ValueError("expert path length must be at least 1")
    if length < 0:
        raise ValueError("path length must be non-negative")
    return score * expert_length / max(expert_length, length)


@dataclass(frozen=True)
class MetricsReport:
    sr: float
    pwsr: float
    gc: float
    pwgc: float
    count: int
    failures: dict

    def as_row(self) -> dict:
        return {"SR": self.sr, "PWSR": self.pwsr, "GC": self.gc, "PWGC": self.pwgc}


def compute_metrics(traces: Sequence[EpisodeTrace]) -> MetricsReport:
    if not traces:
        raise ValueError("cannot compute metrics over zero episodes")
    # sorted for order-insensitive floating point sums
    ordered = sorted(traces, key=lambda t: t.seed)
    n = len(ordered)
    succ = [1.0 if t.success else 0.0 for t in ordered]
    sr = 100.0 * sum(succ) / n
    gc = 100.0 * sum(t.goal_fraction for t in ordered) / n
    pwsr = 100.0 * sum(path_weighted(s, t.steps_taken, t.expert_path_length)
                       for s, t in zip(succ, ordered)) / n
    pwgc = 100.0 * sum(path_weighted(t.goal_fraction, t.steps_taken, t.expert_path_length)
                       for t in ordered) / n
    hist = Counter(t.reason for t in ordered if not t.success)
    return MetricsReport(sr, pwsr, gc, pwgc, n, dict(sorted(hist.items())))


def run_episodes(seeds: Iterable[int], config: HarnessConfig,
                 setups: Optional[dict] = None) -> list[EpisodeTrace]:
    lexicon = Lexicon.load(config.lexicon) if config.lexicon else default_lexicon()
    return [run_episode(s, config, setups.get(s) if setups else None, lexicon) for s in seeds]


def run_ablation(config: HarnessConfig, seeds: Sequence[int]) -> list[tuple[str, MetricsReport, list]]:
    """Run the same seeds under the four oracle combinations.

    Returns ``(row name, report, traces)`` in the fixed row order.  Each seed's
    scene, task and instruction are generated once and shared by all rows.
    """
    seeds = list(seeds)
    if len(seeds) < 100:
        warnings.warn(f"ablation over only {len(seeds)} seeds; use at least 100", stacklevel=2)
    setups = {s: make_setup(s, config) for s in seeds}
    rows = []
    for name, lang_oracle, vision_oracle in ABLATION_ROWS:
        cfg = config.with_oracles(lang_oracle, vision_oracle)
        traces = run_episodes(seeds, cfg, setups)
        rows.append((name, compute_metrics(traces), traces))
    return rows


def write_trace(trace: EpisodeTrace, directory: Path) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"episode_{trace.seed:06d}.jsonl"
    path.write_text("\n".join(trace.to_lines()) + "\n")
    return path


def read_trace(path: Path) -> EpisodeTrace:
    return EpisodeTrace.from_lines(Path(path).read_text().splitlines())
