"""Round-trip reading benchmark: write plans as text, read the text back,
and score exact program recovery.

Samples cover all three templates with random confirmation prefixes across a
pool of generated scenes. The grammar backend must recover every program
exactly; an external backend can be swapped in to measure free-form reading.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass

from .context import Scene, generate_context
from .engine import Turn
from .meaning import ProgramAct, point_dist
from .planner import Plan
from .reader import GRAMMAR_BACKEND, ReaderBackend, UnparseableUtteranceError, read
from .writer import implied_program, write


@dataclass(frozen=True)
class ReadBenchReport:
    samples: int
    exact: int
    errors: int
    elapsed_seconds: float
    backend: str

    @property
    def accuracy(self) -> float | None:
        return self.exact / self.samples if self.samples else None


def _sample_plan(scene: Scene, rng: random.Random) -> tuple[Plan, list[Turn]]:
    ids = sorted(d.id for d in scene.dots)
    kind = rng.choice(("new", "followup", "select"))
    if kind == "new":
        pair = frozenset(rng.sample(ids, 2))
        return Plan(ProgramAct.NEW, pair), []
    anchor = frozenset(rng.sample(ids, 2))
    history = [Turn(index=0, speaker="agent", text="(asked earlier)",
                    program=None, interpretations=point_dist(anchor, scene),
                    confirmed=True)]
    if kind == "followup":
        dot = rng.choice([i for i in ids if i not in anchor])
        plan = Plan(ProgramAct.FOLLOW_UP, frozenset({dot}), ref_turn=0, ref_config=anchor)
    else:
        dot = rng.choice(sorted(anchor))
        plan = Plan(ProgramAct.SELECT, frozenset({dot}), ref_turn=0, ref_config=anchor)
    return plan, history


def run_readbench(n_samples: int, seed: int = 0,
                  backend: ReaderBackend = GRAMMAR_BACKEND,
                  n_scenes: int = 50) -> ReadBenchReport:
    rng = random.Random(seed)
    scenes = [generate_context(seed * 1000 + i).agent_scene for i in range(n_scenes)]
    exact = 0
    errors = 0
    start = time.perf_counter()
    for i in range(n_samples):
        scene = scenes[i % len(scenes)]
        plan, history = _sample_plan(scene, rng)
        confirm = rng.choice((None, True, False))
        text = write(plan, scene, confirm=confirm)
        expected = implied_program(plan, scene, confirm=confirm)
        try:
            got = read(text, history, backend)
        except UnparseableUtteranceError:
            errors += 1
            continue
        if got == expected:
            exact += 1
    elapsed = time.perf_counter() - start
    return ReadBenchReport(samples=n_samples, exact=exact, errors=errors,
                           elapsed_seconds=elapsed, backend=backend.kind)


def report_lines(report: ReadBenchReport) -> list[str]:
    """Deterministic lines first; wall time last so fixed seeds diff cleanly."""
    accuracy = "n/a" if report.accuracy is None else f"{report.accuracy:.4f}"
    return [
        f"backend: {report.backend}",
        f"samples: {report.samples}",
        f"exact: {report.exact}",
        f"errors: {report.errors}",
        f"accuracy: {accuracy}",
        f"elapsed_seconds: {report.elapsed_seconds:.3f}",
    ]
