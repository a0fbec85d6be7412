"""Exact probabilistic state over which of the agent's dots the partner sees.

A world z is a subset of the agent's dots (a bitmask); the belief is a full
categorical distribution over all 2^N worlds, so every update and entropy
query is exact. The prior favors geometrically contiguous worlds: a subset's
weight is exp(-f(z)) where f(z) is the total weight of a minimum spanning
tree over the subset's dots under nearest-neighbor-rank edge weights (an edge
between mutual nearest neighbors costs 0, second-nearest 1, and so on), so
tight clusters are more likely to be shared wholesale than scattered picks.

Observations arrive as partner assertions about a configuration or yes/no
confirmations of one, and multiply the belief by a noisy set-overlap
likelihood: a partner who sees every dot of the configuration answers
truthfully with probability 1 - epsilon, anything else is noise-floor
epsilon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .context import Scene
from .meaning import Config
from .perception import circumradius

MAX_DOTS = 12


class BeliefSizeError(ValueError):
    """Scene exceeds the exact-enumeration size limit."""


class DegeneratePosteriorError(ValueError):
    """An update would leave zero probability mass everywhere."""


class UnknownBeliefDotError(KeyError):
    pass


@dataclass(frozen=True)
class PartnerModel:
    """Noise and proximity parameters of the heuristic partner response model."""

    epsilon_confirm: float = 0.1
    lambda_compact: float = 5.0

    def __post_init__(self):
        if not 0.0 <= self.epsilon_confirm < 0.5:
            raise ValueError("epsilon_confirm must be in [0, 0.5)")
        if self.lambda_compact < 0:
            raise ValueError("lambda_compact must be non-negative")


class ObservationKind(str, Enum):
    PARTNER_ASSERTS = "partner_asserts"
    PARTNER_CONFIRMS = "partner_confirms"
    PARTNER_DENIES_ALL = "partner_denies_all"


@dataclass(frozen=True)
class Observation:
    kind: ObservationKind
    config: Config
    polarity: bool | None = None


def partner_asserts(config: Config) -> Observation:
    return Observation(ObservationKind.PARTNER_ASSERTS, frozenset(config))


def partner_confirms(polarity: bool, config: Config) -> Observation:
    return Observation(ObservationKind.PARTNER_CONFIRMS, frozenset(config), polarity)


def partner_denies_all(config: Config) -> Observation:
    return Observation(ObservationKind.PARTNER_DENIES_ALL, frozenset(config))


@dataclass(frozen=True)
class BeliefState:
    """Categorical distribution over subsets of the agent's dots.

    probabilities[m] is the probability of the world whose bitmask is m, with
    bit i standing for ids[i] (ids sorted ascending).
    """

    ids: tuple[int, ...]
    probabilities: np.ndarray
    scene: Scene

    @property
    def n(self) -> int:
        return len(self.ids)

    def bit_for(self, dot_id: int) -> int:
        try:
            return 1 << self.ids.index(dot_id)
        except ValueError:
            raise UnknownBeliefDotError(f"dot {dot_id} not tracked by this belief") from None

    def mask_for(self, config: Config) -> int:
        mask = 0
        for dot_id in config:
            mask |= self.bit_for(dot_id)
        return mask


def _rank_weights(scene: Scene) -> np.ndarray:
    """Symmetrized nearest-neighbor-rank edge weights.

    rank_i(j) = 0 when j is i's nearest neighbor, 1 for second-nearest, ...;
    w(i, j) = min(rank_i(j), rank_j(i)). Distance ties break by dot id.
    """
    dots = sorted(scene.dots, key=lambda d: d.id)
    n = len(dots)
    rank = np.zeros((n, n), dtype=float)
    for i, di in enumerate(dots):
        order = sorted(
            (j for j in range(n) if j != i),
            key=lambda j: (math.dist((di.x, di.y), (dots[j].x, dots[j].y)), dots[j].id),
        )
        for r, j in enumerate(order):
            rank[i, j] = r
    return np.minimum(rank, rank.T)


def _mst_weight(weights: np.ndarray, members: list[int]) -> float:
    """Prim's algorithm over the induced subgraph."""
    if len(members) <= 1:
        return 0.0
    in_tree = {members[0]}
    remaining = set(members[1:])
    total = 0.0
    best = {j: weights[members[0], j] for j in remaining}
    while remaining:
        j = min(remaining, key=lambda v: (best[v], v))
        total += best[j]
        in_tree.add(j)
        remaining.remove(j)
        for v in remaining:
            w = weights[j, v]
            if w < best[v]:
                best[v] = w
    return total


def build_prior(scene: Scene, shared_count: int | None = None) -> BeliefState:
    """MST-rank prior: p(z) proportional to exp(-f(z)).

    With shared_count set, conditions on |z| = shared_count by zeroing all
    other worlds (off by default).
    """
    n = len(scene.dots)
    if n > MAX_DOTS:
        raise BeliefSizeError(f"{n} dots exceeds the limit of {MAX_DOTS}")
    ids = tuple(sorted(d.id for d in scene.dots))
    weights = _rank_weights(scene)
    size = 1 << n
    probs = np.empty(size, dtype=float)
    for mask in range(size):
        members = [i for i in range(n) if mask >> i & 1]
        probs[mask] = math.exp(-_mst_weight(weights, members))
    if shared_count is not None:
        counts = np.array([bin(m).count("1") for m in range(size)])
        probs = np.where(counts == shared_count, probs, 0.0)
    total = probs.sum()
    if total <= 0:
        raise DegeneratePosteriorError("prior has no mass")
    return BeliefState(ids, probs / total, scene)


def _likelihood(belief: BeliefState, obs: Observation, model: PartnerModel) -> np.ndarray:
    masks = np.arange(belief.probabilities.size)
    y = belief.mask_for(obs.config)
    contains = (masks & y) == y
    eps = model.epsilon_confirm
    if obs.kind is ObservationKind.PARTNER_ASSERTS:
        hit = math.exp(-model.lambda_compact * circumradius(obs.config, belief.scene)) * (1.0 - eps)
        return np.where(contains, hit, eps)
    if obs.kind is ObservationKind.PARTNER_DENIES_ALL or obs.polarity is False:
        return np.where(contains, eps, 1.0 - eps)
    if obs.polarity is True:
        return np.where(contains, 1.0 - eps, eps)
    raise ValueError("confirmation observation requires a polarity")


def update(belief: BeliefState, obs: Observation, model: PartnerModel) -> BeliefState:
    """Multiply by the observation likelihood and renormalize."""
    posterior = belief.probabilities * _likelihood(belief, obs, model)
    total = posterior.sum()
    if total <= 0:
        raise DegeneratePosteriorError(f"observation {obs.kind.value} eliminates all worlds")
    return BeliefState(belief.ids, posterior / total, belief.scene)


def answer_probability(belief: BeliefState, config: Config, polarity: bool,
                       model: PartnerModel) -> float:
    """Predicted probability of a yes/no answer to a question about `config`."""
    like = _likelihood(belief, partner_confirms(polarity, config), model)
    return float(np.dot(like, belief.probabilities))


def marginal(belief: BeliefState, dot_id: int) -> float:
    """Probability that the partner sees the given dot."""
    bit = belief.bit_for(dot_id)
    masks = np.arange(belief.probabilities.size)
    return float(belief.probabilities[(masks & bit) != 0].sum())


def entropy(belief: BeliefState) -> float:
    """Shannon entropy of the world distribution, in bits."""
    p = belief.probabilities
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def snapshot(belief: BeliefState) -> list[list]:
    """(bitmask, probability) pairs for transcript persistence; zero-mass
    worlds are omitted."""
    p = belief.probabilities
    return [[int(m), float(p[m])] for m in range(p.size) if p[m] > 0]
