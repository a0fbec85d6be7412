"""Choose the next symbolic action by maximizing expected information gain.

A candidate plan is either a fresh two-dot question or a one-dot follow-up
extending an already-confirmed configuration. Each candidate is scored by how
much the belief entropy is expected to drop after the partner's yes/no answer;
the expectation uses the partner response model. Once any dot of a confirmed
configuration is believed shared with probability at least theta, the planner
stops asking and selects it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations

from .belief import (
    BeliefState, PartnerModel, answer_probability, entropy, marginal,
    partner_confirms, update,
)
from .context import Scene
from .meaning import Config, ProgramAct, config_key
from .perception import circumradius, color_word, size_word

EIG_TIE_DECIMALS = 12


@dataclass(frozen=True)
class Plan:
    """What to say next: the act, the dots being described, and (for
    follow-ups and selections) the confirmed configuration they hang off."""

    act: ProgramAct
    config: Config
    ref_turn: int | None = None
    ref_config: Config | None = None
    eig: float = 0.0

    def asked_config(self) -> Config:
        """The full configuration whose visibility the plan asks about."""
        if self.ref_config:
            return frozenset(self.config) | self.ref_config
        return frozenset(self.config)


@dataclass(frozen=True)
class PlannerConfig:
    theta: float = 0.8
    max_new_pair_candidates: int | None = None
    followup_enabled: bool = True

    def __post_init__(self):
        if not 0.5 < self.theta < 1.0:
            raise ValueError("theta must be in (0.5, 1)")


@dataclass(frozen=True)
class PlanningHistory:
    """What has been asked and what both players have positively grounded."""

    asked: frozenset = frozenset()                      # frozenset[tuple[int, ...]]
    confirmed: tuple = ()                               # ((turn_index, Config), ...)

    def confirmed_dots(self) -> set[int]:
        dots: set[int] = set()
        for _, cfg in self.confirmed:
            dots |= cfg
        return dots

    def latest_confirmed_with(self, dot_id: int) -> tuple[int, Config] | None:
        for turn, cfg in reversed(self.confirmed):
            if dot_id in cfg:
                return turn, cfg
        return None


EMPTY_HISTORY = PlanningHistory()


def candidate_plans(belief: BeliefState, scene: Scene,
                    history: PlanningHistory = EMPTY_HISTORY,
                    cfg: PlannerConfig = PlannerConfig()) -> list[Plan]:
    """Deterministically ordered candidates: every unasked dot pair as a new
    question, then one-dot extensions of each confirmed configuration."""
    ids = sorted(d.id for d in scene.dots)
    plans: list[Plan] = []
    pairs = [frozenset(p) for p in combinations(ids, 2)]
    pairs = [p for p in pairs if config_key(p) not in history.asked]
    if cfg.max_new_pair_candidates is not None and len(pairs) > cfg.max_new_pair_candidates:
        pairs.sort(key=lambda p: (circumradius(p, scene), config_key(p)))
        pairs = pairs[:cfg.max_new_pair_candidates]
        pairs.sort(key=config_key)
    plans.extend(Plan(ProgramAct.NEW, p) for p in sorted(pairs, key=config_key))
    if cfg.followup_enabled:
        for turn, confirmed in history.confirmed:
            if len(confirmed) >= 4:
                continue
            for dot_id in ids:
                if dot_id in confirmed:
                    continue
                full = confirmed | {dot_id}
                if config_key(full) in history.asked:
                    continue
                plans.append(Plan(ProgramAct.FOLLOW_UP, frozenset({dot_id}),
                                  ref_turn=turn, ref_config=confirmed))
    return plans


def expected_information_gain(belief: BeliefState, plan: Plan,
                              model: PartnerModel) -> float:
    """Entropy drop expected from the partner's yes/no answer to the plan."""
    return entropy(belief) - expected_posterior_entropy(belief, plan, model)


def expected_posterior_entropy(belief: BeliefState, plan: Plan,
                               model: PartnerModel) -> float:
    asked = plan.asked_config()
    expected = 0.0
    for polarity in (True, False):
        p_answer = answer_probability(belief, asked, polarity, model)
        if p_answer <= 0.0:
            continue
        posterior = update(belief, partner_confirms(polarity, asked), model)
        expected += p_answer * entropy(posterior)
    return expected


def _select_plan(belief: BeliefState, history: PlanningHistory, dot_id: int) -> Plan:
    anchor = history.latest_confirmed_with(dot_id)
    turn, cfg = anchor if anchor else (None, None)
    return Plan(ProgramAct.SELECT, frozenset({dot_id}), ref_turn=turn, ref_config=cfg)


def _pick_selection(belief: BeliefState, scene: Scene, pool: list[int],
                    qualified: list[int]) -> int:
    """Prefer a dot whose size/color words resolve back to it.

    A selection is announced only by its size and color words, and the partner
    grounds those words over the dots under discussion, breaking ties toward
    the smallest id. Selecting a dot that this deterministic read-back would
    miss invites a coordination failure, so such dots lose priority."""
    words = {d: (size_word(scene.dot(d)), color_word(scene.dot(d))) for d in pool}

    def reads_back(d: int) -> bool:
        return min(e for e in pool if words[e] == words[d]) == d

    coordinating = [d for d in qualified if reads_back(d)]
    pick_from = coordinating or qualified
    return max(pick_from, key=lambda d: (marginal(belief, d), -d))


def select_fallback(belief: BeliefState, scene: Scene,
                    history: PlanningHistory) -> Plan:
    """The unconditional selection rule: best confirmed dot, else best dot."""
    pool = sorted(history.confirmed_dots()) or sorted(d.id for d in scene.dots)
    best = _pick_selection(belief, scene, pool, pool)
    return _select_plan(belief, history, best)


def forced_select_plan(belief: BeliefState, scene: Scene, history: PlanningHistory,
                       theta: float) -> Plan:
    """Selection when the game must end now: the theta rule if it fires, else
    the best confirmed dot, else the best dot overall."""
    confirmed_dots = sorted(history.confirmed_dots())
    if confirmed_dots:
        qualified = [d for d in confirmed_dots if marginal(belief, d) >= theta] \
            or confirmed_dots
        best = _pick_selection(belief, scene, confirmed_dots, qualified)
        return _select_plan(belief, history, best)
    return select_fallback(belief, scene, history)


def scored_candidates(belief: BeliefState, scene: Scene, history: PlanningHistory,
                      cfg: PlannerConfig, model: PartnerModel) -> list[Plan]:
    """Every candidate with its EIG filled in, in candidate order."""
    return [replace(p, eig=expected_information_gain(belief, p, model))
            for p in candidate_plans(belief, scene, history, cfg)]


_ACT_ORDER = {ProgramAct.FOLLOW_UP: 0, ProgramAct.NEW: 1}


def plan(belief: BeliefState, scene: Scene, history: PlanningHistory,
         cfg: PlannerConfig, model: PartnerModel) -> Plan:
    """Select once confident, otherwise ask the highest-EIG candidate.

    Ties in EIG break toward the more compact asked configuration, then
    follow-up over new, then lexicographic ids; the result is a pure function
    of the inputs.
    """
    confirmed_dots = sorted(history.confirmed_dots())
    if confirmed_dots:
        qualified = [d for d in confirmed_dots if marginal(belief, d) >= cfg.theta]
        if qualified:
            best = _pick_selection(belief, scene, confirmed_dots, qualified)
            return _select_plan(belief, history, best)
    candidates = scored_candidates(belief, scene, history, cfg, model)
    if not candidates:
        return select_fallback(belief, scene, history)

    def sort_key(p: Plan):
        asked = p.asked_config()
        return (-round(p.eig, EIG_TIE_DECIMALS), circumradius(asked, belief.scene),
                _ACT_ORDER[p.act], config_key(asked))

    return min(candidates, key=sort_key)
