"""Grounded predicates over dots and configurations, plus compactness geometry.

Size and color predicates partition [-1, 1] at +/-0.3. Spatial relations are
judged against the centroid of a reference configuration with a dead-zone
margin, so a dot essentially level with the reference is neither left nor
right of it. Compactness of a configuration is the radius of its minimum
enclosing circle.
"""

from __future__ import annotations

import math
from enum import Enum

from .context import Dot, Scene

SIZE_COLOR_THRESHOLD = 0.3
SPATIAL_MARGIN = 0.05
NEAR_DISTANCE = 0.35


class PredicateId(str, Enum):
    IS_SMALL = "is_small"
    IS_MEDIUM = "is_medium"
    IS_LARGE = "is_large"
    IS_DARK = "is_dark"
    IS_GREY = "is_grey"
    IS_LIGHT = "is_light"
    IS_LEFT_OF = "is_left_of"
    IS_RIGHT_OF = "is_right_of"
    IS_ABOVE = "is_above"
    IS_BELOW = "is_below"
    IS_NEAR = "is_near"


UNARY_PREDICATES = frozenset({
    PredicateId.IS_SMALL, PredicateId.IS_MEDIUM, PredicateId.IS_LARGE,
    PredicateId.IS_DARK, PredicateId.IS_GREY, PredicateId.IS_LIGHT,
})
SPATIAL_PREDICATES = frozenset({
    PredicateId.IS_LEFT_OF, PredicateId.IS_RIGHT_OF,
    PredicateId.IS_ABOVE, PredicateId.IS_BELOW, PredicateId.IS_NEAR,
})
SIZE_PREDICATES = (PredicateId.IS_SMALL, PredicateId.IS_MEDIUM, PredicateId.IS_LARGE)
COLOR_PREDICATES = (PredicateId.IS_DARK, PredicateId.IS_GREY, PredicateId.IS_LIGHT)


class PredicateArityError(TypeError):
    """Predicate applied with the wrong argument shape."""


class UnknownDotError(KeyError):
    """A referenced dot id does not resolve in the scene."""


def eval_unary(pred: PredicateId, d: Dot) -> bool:
    """Evaluate a size or color predicate on one dot."""
    if pred is PredicateId.IS_SMALL:
        return d.size < -SIZE_COLOR_THRESHOLD
    if pred is PredicateId.IS_LARGE:
        return d.size > SIZE_COLOR_THRESHOLD
    if pred is PredicateId.IS_MEDIUM:
        return -SIZE_COLOR_THRESHOLD <= d.size <= SIZE_COLOR_THRESHOLD
    if pred is PredicateId.IS_DARK:
        return d.color < -SIZE_COLOR_THRESHOLD
    if pred is PredicateId.IS_LIGHT:
        return d.color > SIZE_COLOR_THRESHOLD
    if pred is PredicateId.IS_GREY:
        return -SIZE_COLOR_THRESHOLD <= d.color <= SIZE_COLOR_THRESHOLD
    raise PredicateArityError(f"{pred.value} is not a unary predicate")


def size_word(d: Dot) -> str:
    for pred, word in zip(SIZE_PREDICATES, ("small", "medium", "large")):
        if eval_unary(pred, d):
            return word
    raise AssertionError("size predicates must partition the range")


def color_word(d: Dot) -> str:
    for pred, word in zip(COLOR_PREDICATES, ("dark", "grey", "light")):
        if eval_unary(pred, d):
            return word
    raise AssertionError("color predicates must partition the range")


def centroid(dot_ids, scene: Scene) -> tuple[float, float]:
    dots = [scene.dot(i) for i in dot_ids]
    if not dots:
        raise ValueError("centroid of empty configuration")
    return (sum(d.x for d in dots) / len(dots), sum(d.y for d in dots) / len(dots))


def eval_spatial(pred: PredicateId, d: Dot, ref, scene: Scene) -> bool:
    """Evaluate a spatial predicate: is `d` <relation> the centroid of `ref`?

    `ref` is an iterable of dot ids resolving in `scene`; `d` must not be one
    of them.
    """
    if pred not in SPATIAL_PREDICATES:
        raise PredicateArityError(f"{pred.value} is not a spatial predicate")
    ref_ids = list(ref)
    try:
        cx, cy = centroid(ref_ids, scene)
    except KeyError as e:
        raise UnknownDotError(str(e)) from e
    if d.id in ref_ids:
        raise ValueError(f"dot {d.id} is part of the reference configuration")
    if pred is PredicateId.IS_LEFT_OF:
        return d.x < cx - SPATIAL_MARGIN
    if pred is PredicateId.IS_RIGHT_OF:
        return d.x > cx + SPATIAL_MARGIN
    if pred is PredicateId.IS_ABOVE:
        return d.y > cy + SPATIAL_MARGIN
    if pred is PredicateId.IS_BELOW:
        return d.y < cy - SPATIAL_MARGIN
    if pred is PredicateId.IS_NEAR:
        return math.dist((d.x, d.y), (cx, cy)) < NEAR_DISTANCE
    raise AssertionError(f"unhandled spatial predicate {pred}")


# --- minimum enclosing circle -------------------------------------------------

def _circle_two(p, q):
    cx = (p[0] + q[0]) / 2.0
    cy = (p[1] + q[1]) / 2.0
    r = max(math.dist((cx, cy), p), math.dist((cx, cy), q))
    return cx, cy, r


def _circle_three(p, q, r):
    # Circumcircle via perpendicular-bisector intersection; None if collinear.
    ax, ay = p
    bx, by = q
    cx, cy = r
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0.0:
        return None
    ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay)
          + (cx * cx + cy * cy) * (ay - by)) / d
    uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx)
          + (cx * cx + cy * cy) * (bx - ax)) / d
    radius = max(math.dist((ux, uy), pt) for pt in (p, q, r))
    return ux, uy, radius


def min_enclosing_circle(points: list[tuple[float, float]]) -> tuple[float, float, float]:
    """Exact smallest enclosing circle by support-set enumeration.

    The optimum is determined by at most three points, so checking every pair
    (diameter circles) and triple (circumcircles) is exact; fine for the tiny
    configurations used here.
    """
    pts = list(points)
    if not pts:
        raise ValueError("no points")
    if len(pts) == 1:
        return pts[0][0], pts[0][1], 0.0
    eps = 1e-12
    best = None
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            c = _circle_two(pts[i], pts[j])
            if all(math.dist((c[0], c[1]), p) <= c[2] + eps for p in pts):
                if best is None or c[2] < best[2]:
                    best = c
    if best is not None:
        return best
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            for k in range(j + 1, len(pts)):
                c = _circle_three(pts[i], pts[j], pts[k])
                if c is None:
                    continue
                if all(math.dist((c[0], c[1]), p) <= c[2] + eps for p in pts):
                    if best is None or c[2] < best[2]:
                        best = c
    if best is None:
        raise AssertionError("minimum enclosing circle not found")
    return best


def circumradius(dot_ids, scene: Scene) -> float:
    """Radius of the minimum enclosing circle of a configuration's dots.

    Empty or singleton configurations have radius 0.
    """
    ids = list(dot_ids)
    if not ids:
        return 0.0
    try:
        pts = [(scene.dot(i).x, scene.dot(i).y) for i in ids]
    except KeyError as e:
        raise UnknownDotError(str(e)) from e
    return min_enclosing_circle(pts)[2]
