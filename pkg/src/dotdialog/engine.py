"""The turn loop: read, update, plan, write; selection and adjudication;
self-play batches.

A GameSession is one agent's side of a game. It reads each incoming utterance
into a program, grounds it against its own scene, folds the evidence into its
belief, then plans and renders a reply. Questions the agent cannot ground get
an honest "No." answer; utterances it cannot even parse trigger the
clarification fallback (re-ask the previous question, belief untouched).
Success is adjudicated on global dot ids, which only the harness ever sees.
"""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass, field

from .belief import (
    BeliefState, PartnerModel, build_prior, partner_asserts, partner_confirms,
    snapshot, update,
)
from .context import GameContext, Scene
from .meaning import (
    COMPACTNESS_RATE, Config, EMPTY_DIST, InterpretationDist, MeaningProgram,
    ProgramAct, config_key, evaluate, most_likely, point_dist,
)
from .llm import ExternalBackendError
from .planner import (
    Plan, PlannerConfig, PlanningHistory, forced_select_plan, plan as choose_plan,
    scored_candidates,
)
from .reader import GRAMMAR_BACKEND, ReaderBackend, UnparseableUtteranceError, read
from .writer import SELECT_MARKER, implied_program, write


class SessionClosedError(RuntimeError):
    pass


@dataclass
class Turn:
    """One transcript entry. `timestamp` is the logical turn clock so that
    transcripts replay byte-identically."""

    index: int
    speaker: str
    text: str
    program: MeaningProgram | None
    interpretations: InterpretationDist | None = None
    confirmed: bool = False
    fallback: bool = False
    plan: Plan | None = None
    eig_trace: tuple = ()
    belief: list | None = None

    @property
    def timestamp(self) -> int:
        return self.index


@dataclass(frozen=True)
class GameResult:
    success: bool
    agent_selection: int | None
    partner_selection: int | None
    turn_count: int
    word_counts: tuple[tuple[str, tuple[int, ...]], ...] = ()


@dataclass(frozen=True)
class EngineConfig:
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    partner_model: PartnerModel = field(default_factory=PartnerModel)
    compactness_rate: float = COMPACTNESS_RATE
    turn_cap: int = 20
    condition_on_k: bool = False
    trace_planner: bool = True


class GameSession:
    """One side of a dialogue: scene-grounded reading, belief, planning."""

    def __init__(self, scene: Scene, cfg: EngineConfig | None = None,
                 backend: ReaderBackend = GRAMMAR_BACKEND, name: str = "agent",
                 shared_count: int | None = None):
        self.scene = scene
        self.cfg = cfg or EngineConfig()
        self.backend = backend
        self.name = name
        self.belief: BeliefState = build_prior(
            scene, shared_count if self.cfg.condition_on_k else None)
        self.history: list[Turn] = []
        self.confirmed: list[tuple[int, Config]] = []
        self.asked: set[tuple[int, ...]] = set()
        self.pending: tuple[int, Config] | None = None
        self.selection: int | None = None
        self.partner_selected = False
        self.closed = False

    # -- bookkeeping ------------------------------------------------------

    def _record(self, speaker: str, text: str, program: MeaningProgram | None,
                **kw) -> Turn:
        turn = Turn(index=len(self.history), speaker=speaker, text=text,
                    program=program, **kw)
        self.history.append(turn)
        return turn

    def _confirm(self, turn_index: int, cfg: Config) -> None:
        self.confirmed.append((turn_index, cfg))
        if 0 <= turn_index < len(self.history):
            self.history[turn_index].confirmed = True

    def _planning_history(self) -> PlanningHistory:
        return PlanningHistory(asked=frozenset(self.asked),
                               confirmed=tuple(self.confirmed))

    def _prev_dist(self, prog: MeaningProgram) -> InterpretationDist | None:
        if prog.act is ProgramAct.SELECT:
            # a selection names one of the dots under discussion: ground it
            # against everything both sides have positively confirmed
            pool = frozenset().union(*(cfg for _, cfg in self.confirmed)) \
                if self.confirmed else frozenset()
            if pool:
                return point_dist(pool, self.scene)
        if prog.ref_turn is not None and 0 <= prog.ref_turn < len(self.history):
            return self.history[prog.ref_turn].interpretations or EMPTY_DIST
        return None

    # -- speaking ----------------------------------------------------------

    def _speak(self, my_plan: Plan, confirm: bool | None) -> str:
        text = write(my_plan, self.scene, confirm=confirm)
        program = implied_program(my_plan, self.scene, confirm=confirm)
        trace = ()
        if self.cfg.trace_planner and my_plan.act is not ProgramAct.SELECT:
            trace = tuple(
                (p.act.value, config_key(p.asked_config()), p.eig)
                for p in scored_candidates(self.belief, self.scene,
                                           self._planning_history(),
                                           self.cfg.planner, self.cfg.partner_model))
        turn = self._record(self.name, text, program, plan=my_plan,
                            eig_trace=trace, belief=snapshot(self.belief))
        if my_plan.act is ProgramAct.SELECT:
            (self.selection,) = my_plan.config
            turn.interpretations = point_dist(my_plan.config, self.scene)
            self.pending = None
        else:
            asked = my_plan.asked_config()
            turn.interpretations = point_dist(asked, self.scene)
            self.pending = (turn.index, asked)
            self.asked.add(config_key(asked))
        return text

    def _select_now(self) -> Plan:
        return forced_select_plan(self.belief, self.scene, self._planning_history(),
                                  self.cfg.planner.theta)

    def open(self) -> str:
        """Opening move for the session that speaks first."""
        if self.closed:
            raise SessionClosedError("session is closed")
        my_plan = choose_plan(self.belief, self.scene, self._planning_history(),
                              self.cfg.planner, self.cfg.partner_model)
        return self._speak(my_plan, confirm=None)

    def force_select(self) -> int:
        """Turn-cap selection: best marginal, recorded as a bare marker."""
        if self.selection is None:
            sel_plan = self._select_now()
            (self.selection,) = sel_plan.config
            self._record(self.name, SELECT_MARKER, MeaningProgram(ProgramAct.END),
                         plan=sel_plan, belief=snapshot(self.belief),
                         interpretations=EMPTY_DIST)
        return self.selection

    # -- the step ----------------------------------------------------------

    def _fallback_reply(self) -> str:
        """Re-ask the previous question; plan fresh if there is none yet."""
        for turn in reversed(self.history[:-1]):
            if turn.speaker == self.name and turn.plan is not None \
                    and turn.plan.act is not ProgramAct.SELECT:
                self._record(self.name, turn.text, turn.program, plan=turn.plan,
                             interpretations=turn.interpretations,
                             belief=snapshot(self.belief))
                self.pending = (turn.index, turn.plan.asked_config())
                return turn.text
        my_plan = choose_plan(self.belief, self.scene, self._planning_history(),
                              self.cfg.planner, self.cfg.partner_model)
        return self._speak(my_plan, confirm=None)

    def receive(self, text: str) -> str | None:
        """Process one partner utterance and produce the reply, or None when
        the game is over from this side's perspective."""
        if self.closed:
            raise SessionClosedError("session is closed")
        try:
            prog = read(text, self.history, self.backend)
        except (UnparseableUtteranceError, ExternalBackendError):
            self._record("partner", text, None, interpretations=EMPTY_DIST,
                         fallback=True)
            return self._fallback_reply()

        partner_turn = self._record("partner", text, prog,
                                    interpretations=EMPTY_DIST)
        # their answer to our open question
        if prog.confirm is not None and self.pending is not None:
            asked_turn, asked_cfg = self.pending
            self.belief = update(self.belief,
                                 partner_confirms(prog.confirm, asked_cfg),
                                 self.cfg.partner_model)
            if prog.confirm:
                self._confirm(asked_turn, asked_cfg)
            self.pending = None
        # their content
        answer: bool | None = None
        if prog.act in (ProgramAct.NEW, ProgramAct.FOLLOW_UP, ProgramAct.SELECT):
            dist = evaluate(prog, self.scene, self._prev_dist(prog),
                            rate=self.cfg.compactness_rate)
            partner_turn.interpretations = dist
            if prog.act is ProgramAct.SELECT:
                self.partner_selected = True
            if dist.is_empty:
                if prog.act is not ProgramAct.SELECT:
                    answer = False
            else:
                grounded = most_likely(dist)
                self.belief = update(self.belief, partner_asserts(grounded),
                                     self.cfg.partner_model)
                self._confirm(partner_turn.index, grounded)
                self.asked.add(config_key(grounded))
                if prog.act is not ProgramAct.SELECT:
                    answer = True
        elif prog.act is ProgramAct.END:
            self.partner_selected = True

        # reply
        if self.partner_selected:
            if self.selection is not None:
                self.closed = True
                return None
            sel_plan = self._select_now()
            (self.selection,) = sel_plan.config
            self._record(self.name, SELECT_MARKER, MeaningProgram(ProgramAct.END),
                         plan=sel_plan, belief=snapshot(self.belief),
                         interpretations=EMPTY_DIST)
            return SELECT_MARKER
        my_plan = choose_plan(self.belief, self.scene, self._planning_history(),
                              self.cfg.planner, self.cfg.partner_model)
        return self._speak(my_plan, confirm=answer)


# --- policies ------------------------------------------------------------------

class PlannerPolicy:
    """The full read/update/plan/write agent."""

    name = "planner"

    def __init__(self, scene: Scene, shared_count: int, rng: random.Random,
                 cfg: EngineConfig, backend: ReaderBackend = GRAMMAR_BACKEND):
        self.session = GameSession(scene, cfg, backend, shared_count=shared_count)

    def open(self) -> str | None:
        return self.session.open()

    def receive(self, text: str) -> str | None:
        return self.session.receive(text)

    @property
    def selection(self) -> int | None:
        return self.session.selection

    def force_select(self) -> int:
        return self.session.force_select()


class RandomSelectorPolicy:
    """Baseline: selects a uniformly random own dot on its first turn."""

    name = "random_selector"

    def __init__(self, scene: Scene, shared_count: int, rng: random.Random,
                 cfg: EngineConfig, backend: ReaderBackend = GRAMMAR_BACKEND):
        self.scene = scene
        self.selection: int | None = None
        self._rng = rng
        self.session = None

    def _select(self) -> str:
        if self.selection is None:
            self.selection = self._rng.choice(sorted(d.id for d in self.scene.dots))
        return SELECT_MARKER

    def open(self) -> str | None:
        return self._select()

    def receive(self, text: str) -> str | None:
        if self.selection is not None:
            return None
        return self._select()

    def force_select(self) -> int:
        self._select()
        return self.selection


class ScriptedPolicy:
    """Replays a stored side of a dialogue verbatim."""

    name = "scripted"

    def __init__(self, lines: list[str], selection: int | None):
        self.lines = list(lines)
        self.final_selection = selection
        self.selection: int | None = None
        self._cursor = 0
        self.session = None

    def _next(self) -> str | None:
        if self._cursor >= len(self.lines):
            if self.selection is None:
                self.selection = self.final_selection
            return None
        line = self.lines[self._cursor]
        self._cursor += 1
        if line == SELECT_MARKER:
            self.selection = self.final_selection
        return line

    def open(self) -> str | None:
        return self._next()

    def receive(self, text: str) -> str | None:
        return self._next()

    def force_select(self) -> int | None:
        self.selection = self.final_selection
        return self.selection


POLICIES = {
    "planner": PlannerPolicy,
    "random": RandomSelectorPolicy,
    "random_selector": RandomSelectorPolicy,
}


def make_policy(name: str, backend: ReaderBackend = GRAMMAR_BACKEND):
    """Policy factory taking (scene, shared_count, rng, cfg)."""
    try:
        cls = POLICIES[name]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}") from None

    def factory(scene: Scene, shared_count: int, rng: random.Random, cfg: EngineConfig):
        return cls(scene, shared_count, rng, cfg, backend=backend)

    return factory


# --- game loop -----------------------------------------------------------------

def play_game(ctx: GameContext, factory_a, factory_b,
              cfg: EngineConfig | None = None, opener: str = "a",
              game_seed: int = 0):
    """Play one game to completion.

    Returns (result, log, policy_a, policy_b); the log is the (speaker, text)
    message sequence."""
    cfg = cfg or EngineConfig()
    policy_a = factory_a(ctx.agent_scene, ctx.k, random.Random(f"{game_seed}/a"), cfg)
    policy_b = factory_b(ctx.partner_scene, ctx.k, random.Random(f"{game_seed}/b"), cfg)
    order = (("a", policy_a), ("b", policy_b)) if opener == "a" else (("b", policy_b), ("a", policy_a))
    (first_name, first), (second_name, second) = order

    log: list[tuple[str, str]] = []
    text = first.open()
    if text is not None:
        log.append((first_name, text))
    messages = 1
    while text is not None and messages < cfg.turn_cap:
        listener_name, listener = (second_name, second) if messages % 2 == 1 \
            else (first_name, first)
        reply = listener.receive(text)
        if reply is not None:
            log.append((listener_name, reply))
        text = reply
        messages += 1
        if policy_a.selection is not None and policy_b.selection is not None:
            break
    if policy_a.selection is None:
        policy_a.force_select()
        log.append(("a", SELECT_MARKER))
    if policy_b.selection is None:
        policy_b.force_select()
        log.append(("b", SELECT_MARKER))

    sel_a, sel_b = policy_a.selection, policy_b.selection
    success = sel_a is not None and sel_a == sel_b and sel_a in ctx.shared
    words: dict[str, list[int]] = {"a": [], "b": []}
    spoken = 0
    for speaker, utterance in log:
        if utterance != SELECT_MARKER:
            words[speaker].append(len(utterance.split()))
            spoken += 1
    result = GameResult(
        success=success,
        agent_selection=sel_a,
        partner_selection=sel_b,
        turn_count=spoken,
        word_counts=tuple((s, tuple(w)) for s, w in sorted(words.items())),
    )
    return result, log, policy_a, policy_b


def run_selfplay(contexts: list[GameContext], factory_a, factory_b,
                 cfg: EngineConfig | None = None, seed: int = 0,
                 alternate_opener: bool = True):
    """Play one game per context; per-game failures are recorded, never raised.

    Returns (results, records, summary): one GameResult (or None) and one
    transcript record per context, plus a summary dict with success rate,
    turn statistics, and word statistics.
    """
    from . import transcripts
    cfg = cfg or EngineConfig()
    results: list[GameResult | None] = []
    records: list[dict] = []
    failures: list[tuple[int, str]] = []
    for i, ctx in enumerate(contexts):
        opener = "a" if (not alternate_opener or i % 2 == 0) else "b"
        try:
            result, log, pa, pb = play_game(ctx, factory_a, factory_b, cfg,
                                            opener=opener, game_seed=seed + i)
            results.append(result)
            records.append(transcripts.game_record(ctx, opener, log, result, pa, pb))
        except Exception as e:  # a broken game must not abort the batch
            failures.append((i, f"{type(e).__name__}: {e}"))
            results.append(None)
            records.append({"context": {"seed": ctx.seed, "k": ctx.k},
                            "opener": opener, "turns": [],
                            "error": f"{type(e).__name__}: {e}", "result": None})
    summary = summarize(results, failures)
    return results, records, summary


def summarize(results: list[GameResult | None], failures=()) -> dict:
    played = [r for r in results if r is not None]
    word_counts = [n for r in played for _, counts in r.word_counts for n in counts]
    summary = {
        "games": len(results),
        "played": len(played),
        "failures": list(failures),
        "successes": sum(1 for r in played if r.success),
        "success_rate": (sum(1 for r in played if r.success) / len(played)) if played else 0.0,
        "mean_turns": statistics.fmean(r.turn_count for r in played) if played else 0.0,
        "words_per_utterance_mean": statistics.fmean(word_counts) if word_counts else 0.0,
        "words_per_utterance_median": statistics.median(word_counts) if word_counts else 0.0,
    }
    return summary
