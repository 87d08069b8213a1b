"""Language module: instruction text to a plan of (subtask, object) steps.

A small template grammar stands in for a learned parser.  Rules, nouns and
synonyms come from a plain-text lexicon file (see ``data/default.lex``).
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Union

from .vision import PerceptionFrame, ray_cell
from .worldsim import ObjectType


class Subtask(str, enum.Enum):
    PickUp = "PickUp"
    Place = "Place"
    Toggle = "Toggle"
    Clean = "Clean"
    Cool = "Cool"
    Heat = "Heat"
    Slice = "Slice"

    def __str__(self) -> str:
        return self.value


APPLIANCE_FOR = {
    Subtask.Clean: ObjectType.Sink,
    Subtask.Heat: ObjectType.Microwave,
    Subtask.Cool: ObjectType.Fridge,
}
MACRO_LENGTH = {Subtask.Clean: 4, Subtask.Heat: 4, Subtask.Cool: 4}

Step = tuple[Subtask, ObjectType]


@dataclass(frozen=True)
class Plan:
    steps: tuple[Step, ...]

    def __post_init__(self):
        if not self.steps:
            raise ValueError("a plan needs at least one step")

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def object_types(self) -> frozenset:
        return frozenset(o for _, o in self.steps)

    def __str__(self) -> str:
        return "[" + ", ".join(f"({g},{o})" for g, o in self.steps) + "]"

    @classmethod
    def of(cls, *steps: tuple) -> "Plan":
        return cls(tuple((Subtask(g), ObjectType(o)) for g, o in steps))


class LanguageError(Exception):
    reason = "LanguageError"


class UnknownObject(LanguageError):
    reason = "UnknownObject"

    def __init__(self, word: str):
        super().__init__(f"unknown object word {word!r}")
        self.word = word


class NoParse(LanguageError):
    reason = "NoParse"


# --- lexicon -------------------------------------------------------------------

@dataclass(frozen=True)
class Rule:
    pattern: tuple[Union[str, frozenset], ...]  # literal, alternation set, or "{slot}"
    template: tuple[tuple[Subtask, str], ...]
    order: int

    @property
    def specificity(self) -> int:
        return sum(1 for p in self.pattern if not _is_slot(p))


def _is_slot(token) -> bool:
    return isinstance(token, str) and token.startswith("{")


@dataclass(frozen=True)
class Lexicon:
    nouns: dict
    synonyms: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...]
    rules: tuple[Rule, ...]

    @classmethod
    def from_text(cls, text: str) -> "Lexicon":
        nouns: dict[str, ObjectType] = {}
        syns: dict[tuple, tuple] = {}
        rules = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            kind, _, rest = line.partition(" ")
            if kind == "noun":
                word, type_name = rest.split()
                if word in nouns:
                    raise ValueError(f"line {lineno}: noun {word!r} defined twice")
                nouns[word] = ObjectType(type_name)
            elif kind == "syn":
                surface, canonical = (s.split() for s in rest.split("=>"))
                if tuple(surface) in syns:
                    raise ValueError(f"line {lineno}: synonym {surface!r} defined twice")
                syns[tuple(surface)] = tuple(canonical)
            elif kind == "rule":
                pattern, template = rest.split("->")
                rules.append(Rule(
                    tuple(frozenset(t.split("|")) if "|" in t else t for t in pattern.split()),
                    tuple(_parse_template_step(s) for s in template.split(";")),
                    len(rules)))
            else:
                raise ValueError(f"line {lineno}: unknown entry {kind!r}")
        missing = set(ObjectType) - set(nouns.values())
        if missing:
            raise ValueError(f"lexicon has no noun for {sorted(m.value for m in missing)}")
        # longest surface forms first so multi-word synonyms win
        ordered = tuple(sorted(syns.items(), key=lambda kv: -len(kv[0])))
        return cls(nouns, ordered, tuple(rules))

    @classmethod
    def load(cls, path: Union[str, Path, None] = None) -> "Lexicon":
        if path is None:
            text = resources.files("lavgrid").joinpath("data/default.lex").read_text()
        else:
            text = Path(path).read_text()
        return cls.from_text(text)


def _parse_template_step(text: str) -> tuple[Subtask, str]:
    g, o = text.split()
    return Subtask(g), o


_DEFAULT: Optional[Lexicon] = None


def default_lexicon() -> Lexicon:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = Lexicon.load()
    return _DEFAULT


# --- parsing -------------------------------------------------------------------

_TOKEN = re.compile(r"[a-z]+|[,.;:!?()]")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def fold_synonyms(tokens: Sequence[str], lexicon: Lexicon) -> list[str]:
    out: list[str] = []
    i = 0
    while i < len(tokens):
        for surface, canonical in lexicon.synonyms:
            if tuple(tokens[i:i + len(surface)]) == surface:
                out.extend(canonical)
                i += len(surface)
                break
        else:
            out.append(tokens[i])
            i += 1
    return out


@dataclass(frozen=True)
class _Match:
    rule: Rule
    start: int
    end: int
    plan: Optional[Plan]
    unknown: Optional[str] = None


def _match_at(rule: Rule, tokens: list[str], start: int, lexicon: Lexicon) -> Optional[_Match]:
    if start + len(rule.pattern) > len(tokens):
        return None
    slots: dict[str, ObjectType] = {}
    unknown = None
    for p, tok in zip(rule.pattern, tokens[start:]):
        if _is_slot(p):
            if tok in lexicon.nouns:
                slots[p] = lexicon.nouns[tok]
            elif tok.isalpha():
                unknown = unknown or tok
            else:
                return None
        elif isinstance(p, frozenset):
            if tok not in p:
                return None
        elif tok != p:
            return None
    end = start + len(rule.pattern)
    if unknown is not None:
        return _Match(rule, start, end, None, unknown)
    steps = tuple((g, slots[o] if o in slots else ObjectType(o)) for g, o in rule.template)
    return _Match(rule, start, end, Plan(steps))


def parse_instruction(instr, lexicon: Optional[Lexicon] = None) -> list[Plan]:
    """Return candidate plans for an instruction, most specific rule first.

    ``instr`` may be an :class:`~lavgrid.taskgen.Instruction` or plain text.
    Raises :class:`UnknownObject` when the best matching rule has a noun slot
    filled by an unknown word, and :class:`NoParse` when no rule matches.
    """
    lexicon = lexicon or default_lexicon()
    text = getattr(instr, "text", instr)
    if not text or not text.strip():
        raise NoParse("empty instruction")
    tokens = fold_synonyms(tokenize(text), lexicon)
    matches = [m for rule in lexicon.rules for i in range(len(tokens))
               if (m := _match_at(rule, tokens, i, lexicon)) is not None]
    good = [m for m in matches if m.plan is not None]
    if not good:
        misses = [m for m in matches if m.unknown is not None]
        if misses:
            best = min(misses, key=lambda m: (-m.rule.specificity, m.rule.order, m.start))
            raise UnknownObject(best.unknown)
        raise NoParse(f"no rule matches {text!r}")
    maximal = [m for m in good if not any(
        o is not m and o.start <= m.start and m.end <= o.end and (o.end - o.start) > (m.end - m.start)
        for o in good)]
    maximal.sort(key=lambda m: (-m.rule.specificity, m.rule.order, m.start))
    plans: list[Plan] = []
    for m in maximal:
        p = normalize_plan(m.plan)
        if p not in plans:
            plans.append(p)
    return plans


def normalize_plan(plan: Plan) -> Plan:
    """Insert implied pick-ups and point appliance subtasks at their appliance."""
    out: list[Step] = []
    held: Optional[ObjectType] = None
    for g, o in plan.steps:
        if g in APPLIANCE_FOR:
            appliance = APPLIANCE_FOR[g]
            if o != appliance:
                if held != o:
                    out.append((Subtask.PickUp, o))
                    held = o
                o = appliance
        elif g == Subtask.Slice:
            if held != ObjectType.Knife:
                out.append((Subtask.PickUp, ObjectType.Knife))
                held = ObjectType.Knife
        elif g == Subtask.PickUp:
            held = o
        elif g == Subtask.Place:
            held = None
        out.append((g, o))
    return Plan(tuple(out))


def is_normalized(plan: Plan) -> bool:
    held = None
    knife = False
    for g, o in plan.steps:
        if g in APPLIANCE_FOR and (o != APPLIANCE_FOR[g] or held is None):
            return False
        if g == Subtask.Place and held is None:
            return False
        if g == Subtask.Slice and not knife:
            return False
        if g == Subtask.PickUp:
            held = o
            knife = knife or o == ObjectType.Knife
        elif g == Subtask.Place:
            held = None
    return True


# --- scene-informed selection --------------------------------------------------

def disambiguate(candidates: Sequence[Plan], scene_summary: PerceptionFrame) -> Plan:
    """Pick the best-ranked plan whose object types have all been seen."""
    if not candidates:
        raise ValueError("no candidate plans")
    for plan in candidates:
        if plan.object_types() <= scene_summary.observed:
            return plan
    return candidates[0]


INFEASIBLE = math.inf


def _nearest_distances(frame: PerceptionFrame) -> dict:
    best: dict[ObjectType, int] = {}
    for i, ray in enumerate(frame.rays):
        if ray.label is None:
            continue
        forward, lateral = ray_cell(frame, i, ray.depth)
        d = forward + abs(lateral)
        if d < best.get(ray.label, math.inf):
            best[ray.label] = d
    return best


def plan_value(plan: Plan, scene_summary: PerceptionFrame,
               unobserved_cost: Optional[float] = None,
               nav_scale: float = 1.0) -> float:
    """Estimated completion cost of ``plan``; ``INFEASIBLE`` if it cannot run.

    Navigation to each step's object costs the grid distance to its nearest
    instance in the current frame, or ``unobserved_cost`` when none is in
    view.  Each step then adds its macro length.
    """
    if not is_normalized(plan):
        return INFEASIBLE
    if unobserved_cost is None:
        unobserved_cost = 4 * scene_summary.config.max_depth
    dist = _nearest_distances(scene_summary)
    total = 0.0
    for g, o in plan.steps:
        total += nav_scale * dist.get(o, unobserved_cost) + MACRO_LENGTH.get(g, 1)
    return total


def rank_plans_by_value(candidates: Sequence[Plan], scene_summary: PerceptionFrame,
                        unobserved_cost: Optional[float] = None,
                        nav_scale: float = 1.0) -> Plan:
    if not candidates:
        raise ValueError("no candidate plans")
    values = [plan_value(p, scene_summary, unobserved_cost, nav_scale) for p in candidates]
    return candidates[min(range(len(candidates)), key=lambda i: (values[i], i))]
