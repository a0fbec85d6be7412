"""Constraint programs: the executable meaning of an utterance.

A MeaningProgram is a dialogue act plus a small conjunction of grounded
constraints over one or two new-dot variables and an optional reference to an
earlier turn's configuration. Evaluating a program against a scene and the
referenced turn's interpretation distribution enumerates every satisfying
assignment and weights the resulting configurations by compactness
(exp(-rate * circumradius)), marginalizing over the previous turn's own
ambiguity.

Programs have a canonical text form used in transcripts and between reader
backends and the engine:

    <act> [confirm=<yes|no>] [ref=<turn>] [new=<n>] { <pred>(<args>); ... }

where <act> is one of new / followup / end / select / yes / no and constraint
arguments are the new-dot variables `a`, `b` or the keyword `ref`. The DSL is
interpreted by this module; no generated code is ever executed.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum

from .context import Scene
from .perception import (
    PredicateId, SPATIAL_PREDICATES, UNARY_PREDICATES,
    circumradius, eval_spatial, eval_unary,
)

COMPACTNESS_RATE = 5.0

VAR_NAMES = ("a", "b")
REF_KEYWORD = "ref"

Config = frozenset  # frozenset[int]: a configuration is a set of dot ids


def config_key(cfg) -> tuple[int, ...]:
    return tuple(sorted(cfg))


class ProgramAct(str, Enum):
    NEW = "new"
    FOLLOW_UP = "followup"
    END = "end"
    CONFIRM_YES = "yes"
    CONFIRM_NO = "no"
    SELECT = "select"


class ProgramValidationError(ValueError):
    """Arity violation, undeclared variable, or malformed program structure."""


class DslSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class EmptyDistributionError(ValueError):
    """Requested the most likely entry of an empty distribution."""


@dataclass(frozen=True)
class Constraint:
    pred: PredicateId
    args: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.pred.value}({', '.join(self.args)})"


@dataclass(frozen=True)
class MeaningProgram:
    act: ProgramAct
    ref_turn: int | None = None
    new_dot_count: int = 0
    constraints: tuple[Constraint, ...] = ()
    confirm: bool | None = None

    def constraint_set(self) -> frozenset[Constraint]:
        return frozenset(self.constraints)


@dataclass(frozen=True)
class Interpretation:
    config: Config
    probability: float
    radius: float


@dataclass(frozen=True)
class InterpretationDist:
    entries: tuple[Interpretation, ...]

    def __post_init__(self):
        if self.entries:
            total = sum(e.probability for e in self.entries)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"probabilities sum to {total}, not 1")
            if any(e.probability <= 0 for e in self.entries):
                raise ValueError("probabilities must be positive")
            keys = [config_key(e.config) for e in self.entries]
            if len(set(keys)) != len(keys):
                raise ValueError("configs must be distinct")

    @property
    def is_empty(self) -> bool:
        return not self.entries

    def configs(self) -> list[Config]:
        return [e.config for e in self.entries]


EMPTY_DIST = InterpretationDist(())


def unit_prev() -> InterpretationDist:
    """The seed distribution for act=new: certainty in the empty configuration."""
    return InterpretationDist((Interpretation(Config(), 1.0, 0.0),))


def point_dist(cfg: Config, scene: Scene) -> InterpretationDist:
    return InterpretationDist((Interpretation(cfg, 1.0, circumradius(cfg, scene)),))


def validate_program(prog: MeaningProgram) -> MeaningProgram:
    """Check arity, variable declarations, and act-specific structure."""
    if not 0 <= prog.new_dot_count <= 2:
        raise ProgramValidationError(f"new_dot_count {prog.new_dot_count} outside 0..2")
    declared = set(VAR_NAMES[:prog.new_dot_count])
    if prog.act in (ProgramAct.CONFIRM_YES, ProgramAct.CONFIRM_NO, ProgramAct.END):
        if prog.constraints or prog.new_dot_count:
            raise ProgramValidationError(f"act {prog.act.value} takes no constraints or new dots")
        return prog
    if prog.act is ProgramAct.NEW and prog.new_dot_count == 0:
        raise ProgramValidationError("act new requires at least one new dot")
    if prog.act is ProgramAct.FOLLOW_UP and prog.ref_turn is None:
        raise ProgramValidationError("act followup requires ref=<turn>")
    if prog.act is ProgramAct.SELECT and prog.new_dot_count != 1:
        raise ProgramValidationError("act select declares exactly one variable")
    for c in prog.constraints:
        if c.pred in UNARY_PREDICATES:
            if len(c.args) != 1:
                raise ProgramValidationError(f"{c.pred.value} takes one argument, got {len(c.args)}")
            if c.args[0] not in declared:
                raise ProgramValidationError(f"{c.pred.value}: undeclared variable {c.args[0]!r}")
        elif c.pred in SPATIAL_PREDICATES:
            if prog.act is ProgramAct.SELECT:
                raise ProgramValidationError("select constraints must be unary")
            if len(c.args) != 2:
                raise ProgramValidationError(f"{c.pred.value} takes two arguments, got {len(c.args)}")
            first, second = c.args
            if first not in declared:
                raise ProgramValidationError(f"{c.pred.value}: undeclared variable {first!r}")
            if second != REF_KEYWORD and second not in declared:
                raise ProgramValidationError(f"{c.pred.value}: second argument must be a variable or 'ref'")
            if second == first:
                raise ProgramValidationError(f"{c.pred.value}: arguments must differ")
            if second == REF_KEYWORD and prog.act is ProgramAct.NEW:
                raise ProgramValidationError("act new has no reference configuration")
        else:
            raise ProgramValidationError(f"unknown predicate {c.pred}")
    return prog


def _satisfies(assignment: dict, prev_cfg: Config, constraints, scene: Scene) -> bool:
    for c in constraints:
        if c.pred in UNARY_PREDICATES:
            if not eval_unary(c.pred, assignment[c.args[0]]):
                return False
        else:
            d = assignment[c.args[0]]
            if c.args[1] == REF_KEYWORD:
                ref_ids = prev_cfg
            else:
                ref_ids = (assignment[c.args[1]].id,)
            if not eval_spatial(c.pred, d, ref_ids, scene):
                return False
    return True


def _branch_configs(prog: MeaningProgram, scene: Scene, prev_cfg: Config) -> set[Config]:
    """All configurations satisfying the program under one previous interpretation."""
    if prog.act is ProgramAct.SELECT:
        pool = [scene.dot(i) for i in prev_cfg] if prev_cfg else list(scene.dots)
        out = set()
        for d in pool:
            if _satisfies({VAR_NAMES[0]: d}, prev_cfg, prog.constraints, scene):
                out.add(Config({d.id}))
        return out
    pool = [d for d in scene.dots if d.id not in prev_cfg]
    out = set()
    if prog.new_dot_count == 1:
        for d in pool:
            if _satisfies({"a": d}, prev_cfg, prog.constraints, scene):
                out.add(prev_cfg | {d.id})
    else:
        for d1 in pool:
            for d2 in pool:
                if d1.id == d2.id:
                    continue
                if _satisfies({"a": d1, "b": d2}, prev_cfg, prog.constraints, scene):
                    out.add(prev_cfg | {d1.id, d2.id})
    return out


def evaluate(prog: MeaningProgram, scene: Scene,
             prev: InterpretationDist | None = None,
             rate: float = COMPACTNESS_RATE) -> InterpretationDist:
    """All weighted interpretations of a program against a scene.

    For each previous interpretation, enumerates assignments of the declared
    new dots (drawn from the scene minus the previous configuration, or from
    within it for select), keeps those satisfying all constraints, and weights
    each resulting configuration by exp(-rate * circumradius) within its
    branch. Branches are then mixed by the previous interpretation's
    probability; branches with no satisfying configuration drop out. The
    result is normalized, or explicitly empty when nothing satisfies.
    """
    validate_program(prog)
    if prog.act in (ProgramAct.CONFIRM_YES, ProgramAct.CONFIRM_NO, ProgramAct.END):
        return EMPTY_DIST
    if prev is None or (prog.act is ProgramAct.NEW):
        prev = unit_prev()
    if prev.is_empty:
        return EMPTY_DIST
    mass: dict[tuple[int, ...], float] = {}
    radii: dict[tuple[int, ...], float] = {}
    for entry in prev.entries:
        configs = _branch_configs(prog, scene, entry.config)
        if not configs:
            continue
        weights = {}
        for cfg in configs:
            key = config_key(cfg)
            if key not in radii:
                radii[key] = circumradius(cfg, scene)
            weights[key] = math.exp(-rate * radii[key])
        z = sum(weights.values())
        for key, w in weights.items():
            mass[key] = mass.get(key, 0.0) + entry.probability * (w / z)
    if not mass:
        return EMPTY_DIST
    total = sum(mass.values())
    entries = tuple(
        Interpretation(Config(key), mass[key] / total, radii[key])
        for key in sorted(mass)
    )
    return InterpretationDist(entries)


def most_likely(dist: InterpretationDist) -> Config:
    """Highest-probability configuration; ties prefer the more compact, then
    the lexicographically smaller id tuple."""
    if dist.is_empty:
        raise EmptyDistributionError("empty interpretation distribution")
    best = min(dist.entries, key=lambda e: (-e.probability, e.radius, config_key(e.config)))
    return best.config


# --- canonical text form -------------------------------------------------------

_ACT_WORDS = {a.value: a for a in ProgramAct}
_PRED_WORDS = {p.value: p for p in PredicateId}

_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*|\d+|[={}();,]|\S")


def print_program(prog: MeaningProgram) -> str:
    """Program -> canonical DSL text (inverse of parse_program)."""
    validate_program(prog)
    parts = [prog.act.value]
    if prog.confirm is not None and prog.act not in (ProgramAct.CONFIRM_YES, ProgramAct.CONFIRM_NO):
        parts.append(f"confirm={'yes' if prog.confirm else 'no'}")
    if prog.ref_turn is not None:
        parts.append(f"ref={prog.ref_turn}")
    if prog.new_dot_count:
        parts.append(f"new={prog.new_dot_count}")
    text = " ".join(parts)
    if prog.constraints:
        body = "; ".join(str(c) for c in prog.constraints)
        text += " { " + body + " }"
    return text


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.items = []  # (token, line, column)
        for lineno, line in enumerate(text.splitlines() or [""], start=1):
            for m in _TOKEN_RE.finditer(line):
                self.items.append((m.group(0), lineno, m.start() + 1))
        self.pos = 0

    def peek(self):
        return self.items[self.pos][0] if self.pos < len(self.items) else None

    def next(self, expect: str | None = None):
        if self.pos >= len(self.items):
            last = self.items[-1] if self.items else ("", 1, 1)
            raise DslSyntaxError(f"unexpected end of input (expected {expect or 'token'})",
                                 last[1], last[2] + len(last[0]))
        tok, line, col = self.items[self.pos]
        if expect is not None and tok != expect:
            raise DslSyntaxError(f"expected {expect!r}, got {tok!r}", line, col)
        self.pos += 1
        return tok, line, col


def parse_program(text: str) -> MeaningProgram:
    """DSL text -> validated MeaningProgram.

    Raises DslSyntaxError (with position) for grammar violations and
    ProgramValidationError for semantic ones.
    """
    toks = _Tokens(text)
    tok, line, col = toks.next()
    if tok not in _ACT_WORDS:
        raise DslSyntaxError(f"unknown act {tok!r}", line, col)
    act = _ACT_WORDS[tok]
    confirm = None
    if act is ProgramAct.CONFIRM_YES:
        confirm = True
    elif act is ProgramAct.CONFIRM_NO:
        confirm = False
    ref_turn = None
    new_count = 0
    while toks.peek() in ("confirm", "ref", "new"):
        key, line, col = toks.next()
        toks.next("=")
        value, vline, vcol = toks.next()
        if key == "confirm":
            if value not in ("yes", "no"):
                raise DslSyntaxError("confirm must be yes or no", vline, vcol)
            confirm = value == "yes"
        elif key == "ref":
            if not value.isdigit():
                raise DslSyntaxError("ref expects a turn index", vline, vcol)
            ref_turn = int(value)
        else:
            if not value.isdigit():
                raise DslSyntaxError("new expects a count", vline, vcol)
            new_count = int(value)
    constraints: list[Constraint] = []
    if toks.peek() == "{":
        toks.next("{")
        while toks.peek() != "}":
            name, nline, ncol = toks.next()
            if name not in _PRED_WORDS:
                raise DslSyntaxError(f"unknown predicate {name!r}", nline, ncol)
            toks.next("(")
            args = []
            while True:
                arg, aline, acol = toks.next()
                if arg not in VAR_NAMES and arg != REF_KEYWORD:
                    raise DslSyntaxError(f"argument must be a, b, or ref; got {arg!r}", aline, acol)
                args.append(arg)
                tok = toks.peek()
                if tok == ",":
                    toks.next(",")
                    continue
                break
            toks.next(")")
            constraints.append(Constraint(_PRED_WORDS[name], tuple(args)))
            if toks.peek() == ";":
                toks.next(";")
        toks.next("}")
    if toks.peek() is not None:
        tok, line, col = toks.items[toks.pos]
        raise DslSyntaxError(f"unexpected trailing token {tok!r}", line, col)
    prog = MeaningProgram(act=act, ref_turn=ref_turn, new_dot_count=new_count,
                          constraints=tuple(constraints), confirm=confirm)
    return validate_program(prog)
