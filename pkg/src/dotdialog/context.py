"""Game boards: a global dot set, two overlapping circular views, a hidden shared subset.

Each player sees a circular viewport onto the board. Coordinates handed to a
player are re-centered on that player's own viewport, so raw coordinates never
reveal which dots fall in the overlap. Dot ids are global (shared dots carry
the same id in both views) but randomly permuted, so ids do not leak overlap
structure either.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field


class ContextError(Exception):
    """Base class for board construction / serialization failures."""


class GenerationInfeasibleError(ContextError):
    """Rejection sampling exceeded its retry budget (settings incompatible)."""


class MalformedRecordError(ContextError):
    """A context record failed validation; message names the offending field."""


@dataclass(frozen=True)
class Dot:
    """One attribute-bearing point. size and color are normalized to [-1, 1];
    lower color means darker."""

    id: int
    x: float
    y: float
    size: float
    color: float


@dataclass(frozen=True)
class Scene:
    """One player's view: its dots plus the viewport circle, in the player's own frame."""

    dots: tuple[Dot, ...]
    view_center: tuple[float, float] = (0.0, 0.0)
    view_radius: float = 1.0

    def dot(self, dot_id: int) -> Dot:
        for d in self.dots:
            if d.id == dot_id:
                return d
        raise KeyError(f"unknown dot id {dot_id}")

    def ids(self) -> tuple[int, ...]:
        return tuple(d.id for d in self.dots)


@dataclass(frozen=True)
class GameContext:
    """Both views plus the hidden shared set. Agents never see `shared` or the
    other player's scene."""

    agent_scene: Scene
    partner_scene: Scene
    shared: frozenset[int]
    seed: int = 0

    @property
    def k(self) -> int:
        return len(self.shared)


@dataclass(frozen=True)
class BoardGeometry:
    view_radius: float = 1.0
    center_distance: float = 1.0
    min_dot_distance: float = 0.12
    edge_margin: float = 0.05
    max_tries: int = 50_000


def _sample_in_disk(rng: random.Random, cx: float, cy: float, radius: float) -> tuple[float, float]:
    r = radius * math.sqrt(rng.random())
    theta = 2.0 * math.pi * rng.random()
    return cx + r * math.cos(theta), cy + r * math.sin(theta)


def generate_context(
    seed: int,
    k: int = 4,
    n_per_view: int = 7,
    geometry: BoardGeometry | None = None,
) -> GameContext:
    """Generate a board with `n_per_view` dots per view, exactly `k` shared.

    Pure function of (seed, k, n_per_view, geometry): identical arguments give
    bit-identical contexts. Raises GenerationInfeasibleError when rejection
    sampling cannot satisfy the geometric constraints within the retry budget.
    """
    geom = geometry or BoardGeometry()
    if k < 1 or k > n_per_view:
        raise GenerationInfeasibleError(f"need 1 <= k <= n_per_view, got k={k}, n={n_per_view}")

    rng = random.Random(seed)
    radius = geom.view_radius
    half = geom.center_distance / 2.0
    center_a = (-half, 0.0)
    center_b = (half, 0.0)
    inner = radius - geom.edge_margin
    if inner <= 0 or geom.center_distance >= 2.0 * inner:
        raise GenerationInfeasibleError("viewports do not overlap under this geometry")

    placed: list[tuple[float, float]] = []
    tries = 0

    def place(region: str) -> tuple[float, float]:
        nonlocal tries
        while True:
            tries += 1
            if tries > geom.max_tries:
                raise GenerationInfeasibleError(
                    f"exceeded {geom.max_tries} placement attempts "
                    f"(k={k}, n={n_per_view}, d_min={geom.min_dot_distance})"
                )
            if region == "shared":
                p = _sample_in_disk(rng, *center_a, inner)
                if math.dist(p, center_b) > inner:
                    continue
            elif region == "a_only":
                p = _sample_in_disk(rng, *center_a, inner)
                if math.dist(p, center_b) <= radius:
                    continue
            else:  # b_only
                p = _sample_in_disk(rng, *center_b, inner)
                if math.dist(p, center_a) <= radius:
                    continue
            if all(math.dist(p, q) >= geom.min_dot_distance for q in placed):
                placed.append(p)
                return p

    shared_pts = [place("shared") for _ in range(k)]
    a_pts = [place("a_only") for _ in range(n_per_view - k)]
    b_pts = [place("b_only") for _ in range(n_per_view - k)]

    total = 2 * n_per_view - k
    ids = list(range(total))
    rng.shuffle(ids)
    attrs = [(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)) for _ in range(total)]

    def build_dot(idx: int, pos: tuple[float, float], center: tuple[float, float]) -> Dot:
        size, color = attrs[idx]
        return Dot(id=ids[idx], x=pos[0] - center[0], y=pos[1] - center[1], size=size, color=color)

    agent_dots = [build_dot(i, p, center_a) for i, p in enumerate(shared_pts)]
    agent_dots += [build_dot(k + i, p, center_a) for i, p in enumerate(a_pts)]
    partner_dots = [build_dot(i, p, center_b) for i, p in enumerate(shared_pts)]
    partner_dots += [build_dot(k + len(a_pts) + i, p, center_b) for i, p in enumerate(b_pts)]

    agent_scene = Scene(tuple(sorted(agent_dots, key=lambda d: d.id)), (0.0, 0.0), radius)
    partner_scene = Scene(tuple(sorted(partner_dots, key=lambda d: d.id)), (0.0, 0.0), radius)
    shared = frozenset(ids[i] for i in range(k))
    return GameContext(agent_scene, partner_scene, shared, seed=seed)


def check_context(ctx: GameContext, k: int | None = None, n_per_view: int | None = None,
                  geometry: BoardGeometry | None = None) -> None:
    """Assert all context invariants; raises ContextError on any violation."""
    geom = geometry or BoardGeometry()
    scenes = {"agent_scene": ctx.agent_scene, "partner_scene": ctx.partner_scene}
    for name, scene in scenes.items():
        if n_per_view is not None and len(scene.dots) != n_per_view:
            raise ContextError(f"{name}: expected {n_per_view} dots, got {len(scene.dots)}")
        seen = set()
        for d in scene.dots:
            if d.id in seen:
                raise ContextError(f"{name}: duplicate dot id {d.id}")
            seen.add(d.id)
            if math.dist((d.x, d.y), scene.view_center) >= scene.view_radius:
                raise ContextError(f"{name}: dot {d.id} outside viewport")
            for value, lab in ((d.x, "x"), (d.y, "y"), (d.size, "size"), (d.color, "color")):
                if not (math.isfinite(value) and -1.0 <= value <= 1.0):
                    raise ContextError(f"{name}: dot {d.id} {lab} out of range")
        for i, a in enumerate(scene.dots):
            for b in scene.dots[i + 1:]:
                if math.dist((a.x, a.y), (b.x, b.y)) < geom.min_dot_distance - 1e-12:
                    raise ContextError(f"{name}: dots {a.id},{b.id} closer than d_min")
    overlap = frozenset(ctx.agent_scene.ids()) & frozenset(ctx.partner_scene.ids())
    if overlap != ctx.shared:
        raise ContextError("shared set is not the intersection of the two views")
    if k is not None and len(ctx.shared) != k:
        raise ContextError(f"expected |shared|={k}, got {len(ctx.shared)}")


# --- serialization -----------------------------------------------------------

def _scene_to_record(scene: Scene) -> dict:
    return {
        "dots": [{"id": d.id, "x": d.x, "y": d.y, "size": d.size, "color": d.color}
                 for d in scene.dots],
        "center": [scene.view_center[0], scene.view_center[1]],
        "radius": scene.view_radius,
    }


def _require(record: dict, key: str, kind, where: str):
    if key not in record:
        raise MalformedRecordError(f"{where}.{key}: missing")
    value = record[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise MalformedRecordError(f"{where}.{key}: expected number, got {type(value).__name__}")
        return float(value)
    if not isinstance(value, kind):
        raise MalformedRecordError(f"{where}.{key}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def _scene_from_record(record: dict, where: str) -> Scene:
    if not isinstance(record, dict):
        raise MalformedRecordError(f"{where}: expected object")
    dots_rec = _require(record, "dots", list, where)
    center = _require(record, "center", list, where)
    radius = _require(record, "radius", float, where)
    if len(center) != 2:
        raise MalformedRecordError(f"{where}.center: expected [x, y]")
    dots = []
    for i, dr in enumerate(dots_rec):
        w = f"{where}.dots[{i}]"
        if not isinstance(dr, dict):
            raise MalformedRecordError(f"{w}: expected object")
        dots.append(Dot(
            id=_require(dr, "id", int, w),
            x=_require(dr, "x", float, w),
            y=_require(dr, "y", float, w),
            size=_require(dr, "size", float, w),
            color=_require(dr, "color", float, w),
        ))
    return Scene(tuple(dots), (float(center[0]), float(center[1])), radius)


def save_context(ctx: GameContext) -> dict:
    """Context -> plain-dict record (the on-disk schema)."""
    return {
        "seed": ctx.seed,
        "k": ctx.k,
        "agent_scene": _scene_to_record(ctx.agent_scene),
        "partner_scene": _scene_to_record(ctx.partner_scene),
        "shared": sorted(ctx.shared),
    }


def load_context(record: dict) -> GameContext:
    """Record -> GameContext; raises MalformedRecordError with a field path."""
    if not isinstance(record, dict):
        raise MalformedRecordError("record: expected object")
    seed = _require(record, "seed", int, "record")
    _require(record, "k", int, "record")
    agent = _scene_from_record(_require(record, "agent_scene", dict, "record"), "agent_scene")
    partner = _scene_from_record(_require(record, "partner_scene", dict, "record"), "partner_scene")
    shared_rec = _require(record, "shared", list, "record")
    for i, v in enumerate(shared_rec):
        if not isinstance(v, int):
            raise MalformedRecordError(f"shared[{i}]: expected integer id")
    ctx = GameContext(agent, partner, frozenset(shared_rec), seed=seed)
    if record["k"] != ctx.k:
        raise MalformedRecordError(f"k: value {record['k']} does not match |shared|={ctx.k}")
    if frozenset(agent.ids()) & frozenset(partner.ids()) != ctx.shared:
        raise MalformedRecordError("shared: not the intersection of the two views")
    return ctx


def dumps_context(ctx: GameContext) -> str:
    return json.dumps(save_context(ctx), sort_keys=True)


def loads_context(text: str) -> GameContext:
    try:
        record = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedRecordError(f"record: invalid JSON ({e})") from e
    return load_context(record)


def write_corpus(contexts: list[GameContext], path: str) -> None:
    """One context record per line (JSONL)."""
    with open(path, "w") as fh:
        for ctx in contexts:
            fh.write(dumps_context(ctx) + "\n")


def read_corpus(path: str) -> list[GameContext]:
    contexts = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                contexts.append(loads_context(line))
            except MalformedRecordError as e:
                raise MalformedRecordError(f"line {lineno}: {e}") from e
    return contexts
