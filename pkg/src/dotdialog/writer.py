"""Render plans as utterance text via fixed templates, one per act.

Position words come from geometry: in a pair, each dot is labeled by the
dominant axis of their offset (left/right when |dx| >= |dy|, else
top/bottom); a follow-up dot is located relative to the reference centroid
with one or two direction words, or "near" when it sits inside the dead zone
on both axes. Every template slot is recoverable by the grammar reader, and
`implied_program` exposes exactly the meaning program a rendered utterance
encodes.
"""

from __future__ import annotations

from .context import Scene
from .meaning import Constraint, MeaningProgram, ProgramAct
from .perception import PredicateId, SPATIAL_MARGIN, centroid, color_word, size_word
from .planner import Plan

NEW_TEMPLATE = ("Do you see a pair of dots, where the {pos_a} dot is {size_a}-sized "
                "and {color_a} and the {pos_b} dot is {size_b}-sized and {color_b}?")
FOLLOW_UP_TEMPLATE = "Is there a {size} size and {color} color dot {position} those?"
SELECT_TEMPLATE = "Let's select the {size} size and {color} color one."
SELECT_MARKER = "<select>"

# follow-up position phrase -> the spatial constraints it encodes
FOLLOW_UP_POSITIONS = {
    ("left",): "to the left of",
    ("right",): "to the right of",
    ("above",): "above",
    ("below",): "below",
    ("left", "above"): "to the left and above",
    ("left", "below"): "to the left and below",
    ("right", "above"): "to the right and above",
    ("right", "below"): "to the right and below",
    ("near",): "near",
}

_DIRECTION_PREDICATES = {
    "left": PredicateId.IS_LEFT_OF,
    "right": PredicateId.IS_RIGHT_OF,
    "above": PredicateId.IS_ABOVE,
    "below": PredicateId.IS_BELOW,
    "near": PredicateId.IS_NEAR,
}


class UnverbalizablePlanError(ValueError):
    """The plan does not fit any write template."""


def _pair_layout(plan: Plan, scene: Scene):
    ids = sorted(plan.config)
    if len(ids) != 2:
        raise UnverbalizablePlanError(f"a new question describes exactly 2 dots, got {len(ids)}")
    d1, d2 = scene.dot(ids[0]), scene.dot(ids[1])
    dx = d1.x - d2.x
    dy = d1.y - d2.y
    if abs(dx) >= abs(dy):
        if abs(dx) <= SPATIAL_MARGIN:
            raise UnverbalizablePlanError("pair too close to describe by position")
        first, second = (d1, d2) if dx < 0 else (d2, d1)
        return first, second, ("left", "right"), PredicateId.IS_LEFT_OF
    if abs(dy) <= SPATIAL_MARGIN:
        raise UnverbalizablePlanError("pair too close to describe by position")
    first, second = (d1, d2) if dy > 0 else (d2, d1)
    return first, second, ("top", "bottom"), PredicateId.IS_ABOVE


def _followup_directions(plan: Plan, scene: Scene) -> tuple[str, ...]:
    (dot_id,) = plan.config
    if not plan.ref_config:
        raise UnverbalizablePlanError("follow-up requires a reference configuration")
    d = scene.dot(dot_id)
    cx, cy = centroid(plan.ref_config, scene)
    words = []
    if d.x < cx - SPATIAL_MARGIN:
        words.append("left")
    elif d.x > cx + SPATIAL_MARGIN:
        words.append("right")
    if d.y > cy + SPATIAL_MARGIN:
        words.append("above")
    elif d.y < cy - SPATIAL_MARGIN:
        words.append("below")
    return tuple(words) if words else ("near",)


def write(plan: Plan, scene: Scene, confirm: bool | None = None) -> str:
    """Plan -> utterance text, optionally prefixed with a Yes./No. answer."""
    if plan.act is ProgramAct.NEW:
        first, second, (pos_a, pos_b), _ = _pair_layout(plan, scene)
        text = NEW_TEMPLATE.format(
            pos_a=pos_a, size_a=size_word(first), color_a=color_word(first),
            pos_b=pos_b, size_b=size_word(second), color_b=color_word(second),
        )
    elif plan.act is ProgramAct.FOLLOW_UP:
        (dot_id,) = plan.config
        d = scene.dot(dot_id)
        position = FOLLOW_UP_POSITIONS[_followup_directions(plan, scene)]
        text = FOLLOW_UP_TEMPLATE.format(size=size_word(d), color=color_word(d),
                                         position=position)
    elif plan.act is ProgramAct.SELECT:
        (dot_id,) = plan.config
        d = scene.dot(dot_id)
        text = SELECT_TEMPLATE.format(size=size_word(d), color=color_word(d))
    else:
        raise UnverbalizablePlanError(f"no template for act {plan.act.value}")
    if confirm is not None:
        text = ("Yes. " if confirm else "No. ") + text
    return text


def implied_program(plan: Plan, scene: Scene, confirm: bool | None = None) -> MeaningProgram:
    """The canonical meaning program encoded by write(plan, scene, confirm)."""
    if plan.act is ProgramAct.NEW:
        first, second, _, relation = _pair_layout(plan, scene)
        constraints = (
            Constraint(_size_pred(first), ("a",)),
            Constraint(_color_pred(first), ("a",)),
            Constraint(_size_pred(second), ("b",)),
            Constraint(_color_pred(second), ("b",)),
            Constraint(relation, ("a", "b")),
        )
        return MeaningProgram(ProgramAct.NEW, new_dot_count=2,
                              constraints=constraints, confirm=confirm)
    if plan.act is ProgramAct.FOLLOW_UP:
        (dot_id,) = plan.config
        d = scene.dot(dot_id)
        constraints = [Constraint(_size_pred(d), ("a",)), Constraint(_color_pred(d), ("a",))]
        for word in _followup_directions(plan, scene):
            constraints.append(Constraint(_DIRECTION_PREDICATES[word], ("a", "ref")))
        return MeaningProgram(ProgramAct.FOLLOW_UP, ref_turn=plan.ref_turn, new_dot_count=1,
                              constraints=tuple(constraints), confirm=confirm)
    if plan.act is ProgramAct.SELECT:
        (dot_id,) = plan.config
        d = scene.dot(dot_id)
        constraints = (Constraint(_size_pred(d), ("a",)), Constraint(_color_pred(d), ("a",)))
        return MeaningProgram(ProgramAct.SELECT, ref_turn=plan.ref_turn, new_dot_count=1,
                              constraints=constraints, confirm=confirm)
    raise UnverbalizablePlanError(f"no template for act {plan.act.value}")


def _size_pred(d) -> PredicateId:
    return {"small": PredicateId.IS_SMALL, "medium": PredicateId.IS_MEDIUM,
            "large": PredicateId.IS_LARGE}[size_word(d)]


def _color_pred(d) -> PredicateId:
    return {"dark": PredicateId.IS_DARK, "grey": PredicateId.IS_GREY,
            "light": PredicateId.IS_LIGHT}[color_word(d)]
