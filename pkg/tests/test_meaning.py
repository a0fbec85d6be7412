import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from dotdialog.context import Dot, Scene
from dotdialog.meaning import (
    COMPACTNESS_RATE, Constraint, DslSyntaxError, EmptyDistributionError,
    Interpretation, InterpretationDist, MeaningProgram, ProgramAct,
    ProgramValidationError, config_key, evaluate, most_likely, parse_program,
    point_dist, print_program, unit_prev, validate_program,
)
from dotdialog.perception import PredicateId, circumradius


def dot(i, x=0.0, y=0.0, size=0.0, color=0.0):
    return Dot(id=i, x=x, y=y, size=size, color=color)


FIVE_DOT_SCENE = Scene((
    dot(0, x=-0.5, y=0.5, size=-0.6, color=0.1),   # small grey, upper left
    dot(1, x=0.5, y=0.6, size=0.0, color=-0.5),    # medium dark, upper right
    dot(2, x=0.0, y=-0.5, size=-0.5, color=0.0),   # small grey, low
    dot(3, x=0.4, y=-0.6, size=0.5, color=0.6),    # large light, low
    dot(4, x=-0.4, y=-0.4, size=-0.4, color=0.2),  # small grey, low
))


def c(pred, *args):
    return Constraint(pred, tuple(args))


SECTION_PROGRAM = MeaningProgram(
    act=ProgramAct.FOLLOW_UP, ref_turn=0, new_dot_count=1,
    constraints=(c(PredicateId.IS_SMALL, "a"), c(PredicateId.IS_GREY, "a"),
                 c(PredicateId.IS_BELOW, "a", "ref")),
)


def test_unconstrained_enumeration():
    prog = MeaningProgram(act=ProgramAct.NEW, new_dot_count=1)
    dist = evaluate(prog, FIVE_DOT_SCENE)
    assert len(dist.entries) == 5
    # all radii zero, so the compactness weights are uniform
    for entry in dist.entries:
        assert entry.probability == pytest.approx(1 / 5)


def test_seven_dot_unconstrained():
    scene = Scene(tuple(dot(i, x=i / 10.0) for i in range(7)))
    dist = evaluate(MeaningProgram(act=ProgramAct.NEW, new_dot_count=1), scene)
    assert len(dist.entries) == 7


def oracle_followup(prog, scene, prev):
    """Brute-force enumeration with direct predicate arithmetic, kept
    independent of meaning.evaluate."""
    from dotdialog.perception import SPATIAL_MARGIN
    out = {}
    for entry in prev.entries:
        ref_ids = sorted(entry.config)
        cx = sum(scene.dot(i).x for i in ref_ids) / len(ref_ids)
        cy = sum(scene.dot(i).y for i in ref_ids) / len(ref_ids)
        branch = {}
        for d in scene.dots:
            if d.id in entry.config:
                continue
            if not (d.size < -0.3 and -0.3 <= d.color <= 0.3 and d.y < cy - SPATIAL_MARGIN):
                continue
            cfg = frozenset(entry.config | {d.id})
            branch[config_key(cfg)] = math.exp(-COMPACTNESS_RATE * circumradius(cfg, scene))
        z = sum(branch.values())
        for key, w in branch.items():
            out[key] = out.get(key, 0.0) + entry.probability * w / z
    total = sum(out.values())
    return {key: p / total for key, p in out.items()}


def test_followup_matches_oracle_enumeration():
    prev = InterpretationDist((
        Interpretation(frozenset({0, 1}), 0.6, circumradius([0, 1], FIVE_DOT_SCENE)),
        Interpretation(frozenset({1, 3}), 0.4, circumradius([1, 3], FIVE_DOT_SCENE)),
    ))
    dist = evaluate(SECTION_PROGRAM, FIVE_DOT_SCENE, prev)
    expected = oracle_followup(SECTION_PROGRAM, FIVE_DOT_SCENE, prev)
    got = {config_key(e.config): e.probability for e in dist.entries}
    assert set(got) == set(expected)
    for key in expected:
        assert got[key] == pytest.approx(expected[key], abs=1e-12)


def test_compactness_weight_ratio():
    # one previous interpretation, two satisfying configs with different radii
    scene = Scene((
        dot(0, x=0.0, y=0.0, size=0.0, color=0.0),
        dot(1, x=0.1, y=0.0, size=-0.5, color=0.0),
        dot(2, x=0.8, y=0.0, size=-0.5, color=0.0),
    ))
    prog = MeaningProgram(act=ProgramAct.FOLLOW_UP, ref_turn=0, new_dot_count=1,
                          constraints=(c(PredicateId.IS_SMALL, "a"),))
    prev = point_dist(frozenset({0}), scene)
    dist = evaluate(prog, scene, prev)
    assert len(dist.entries) == 2
    by_key = {config_key(e.config): e for e in dist.entries}
    r1 = by_key[(0, 1)].radius
    r2 = by_key[(0, 2)].radius
    assert r1 < r2
    ratio = by_key[(0, 1)].probability / by_key[(0, 2)].probability
    assert ratio == pytest.approx(math.exp(-COMPACTNESS_RATE * (r1 - r2)))


def test_evaluate_empty_is_not_an_error():
    prog = MeaningProgram(act=ProgramAct.NEW, new_dot_count=1,
                          constraints=(c(PredicateId.IS_LARGE, "a"),))
    scene = Scene((dot(0, size=-0.9), dot(1, x=0.5, size=-0.8)))
    dist = evaluate(prog, scene)
    assert dist.is_empty


def test_monotone_filtering():
    rng = random.Random(5)
    scene = Scene(tuple(dot(i, x=rng.uniform(-1, 1), y=rng.uniform(-1, 1),
                            size=rng.uniform(-1, 1), color=rng.uniform(-1, 1))
                        for i in range(7)))
    base = MeaningProgram(act=ProgramAct.NEW, new_dot_count=1,
                          constraints=(c(PredicateId.IS_SMALL, "a"),))
    more = MeaningProgram(act=ProgramAct.NEW, new_dot_count=1,
                          constraints=(c(PredicateId.IS_SMALL, "a"),
                                       c(PredicateId.IS_DARK, "a")))
    small = {config_key(e.config) for e in evaluate(base, scene).entries}
    smaller = {config_key(e.config) for e in evaluate(more, scene).entries}
    assert smaller <= small


def test_marginalization_linearity():
    prev1 = point_dist(frozenset({0, 1}), FIVE_DOT_SCENE)
    prev2 = point_dist(frozenset({1, 3}), FIVE_DOT_SCENE)
    blend = InterpretationDist((
        Interpretation(frozenset({0, 1}), 0.3, prev1.entries[0].radius),
        Interpretation(frozenset({1, 3}), 0.7, prev2.entries[0].radius),
    ))
    d1 = evaluate(SECTION_PROGRAM, FIVE_DOT_SCENE, prev1)
    d2 = evaluate(SECTION_PROGRAM, FIVE_DOT_SCENE, prev2)
    mixed = evaluate(SECTION_PROGRAM, FIVE_DOT_SCENE, blend)
    expected = {}
    for dist, w in ((d1, 0.3), (d2, 0.7)):
        for e in dist.entries:
            expected[config_key(e.config)] = expected.get(config_key(e.config), 0) + w * e.probability
    got = {config_key(e.config): e.probability for e in mixed.entries}
    assert set(got) == set(expected)
    for key in expected:
        assert got[key] == pytest.approx(expected[key], abs=1e-12)


def test_two_new_dots_ordered_assignments():
    scene = Scene((
        dot(0, x=-0.5, size=-0.5, color=-0.5),
        dot(1, x=0.5, size=0.5, color=0.5),
        dot(2, x=0.0, y=0.6, size=0.0, color=0.0),
    ))
    prog = MeaningProgram(act=ProgramAct.NEW, new_dot_count=2,
                          constraints=(c(PredicateId.IS_SMALL, "a"),
                                       c(PredicateId.IS_LARGE, "b"),
                                       c(PredicateId.IS_LEFT_OF, "a", "b")))
    dist = evaluate(prog, scene)
    assert [config_key(e.config) for e in dist.entries] == [(0, 1)]


# --- most_likely -----------------------------------------------------------------

def test_most_likely_singleton():
    dist = point_dist(frozenset({2}), FIVE_DOT_SCENE)
    assert most_likely(dist) == frozenset({2})


def test_most_likely_compactness_tie_break():
    dist = InterpretationDist((
        Interpretation(frozenset({0, 1}), 0.5, 0.4),
        Interpretation(frozenset({2, 3}), 0.5, 0.2),
    ))
    assert most_likely(dist) == frozenset({2, 3})


def test_most_likely_matches_linear_scan():
    rng = random.Random(6)
    for _ in range(100):
        n = rng.randint(1, 8)
        weights = [rng.uniform(0.01, 1) for _ in range(n)]
        total = sum(weights)
        entries = tuple(
            Interpretation(frozenset({i}), w / total, rng.uniform(0, 1))
            for i, w in enumerate(weights))
        dist = InterpretationDist(entries)
        best = most_likely(dist)
        assert all(e.probability <= dist.entries[[config_key(x.config) for x in dist.entries]
                                                 .index(config_key(best))].probability + 1e-12
                   for e in entries)


def test_most_likely_empty_raises():
    with pytest.raises(EmptyDistributionError):
        most_likely(InterpretationDist(()))


# --- the DSL ---------------------------------------------------------------------

def test_parse_spec_example():
    prog = parse_program("followup ref=1 new=1 { is_small(a); is_grey(a); is_below(a, ref) }")
    assert prog == MeaningProgram(
        act=ProgramAct.FOLLOW_UP, ref_turn=1, new_dot_count=1,
        constraints=(c(PredicateId.IS_SMALL, "a"), c(PredicateId.IS_GREY, "a"),
                     c(PredicateId.IS_BELOW, "a", "ref")))


def test_print_parse_canonicalizes():
    text = "followup   ref=1  new=1 {is_small(a);is_grey(a);is_below(a,ref);}"
    assert print_program(parse_program(text)) == \
        "followup ref=1 new=1 { is_small(a); is_grey(a); is_below(a, ref) }"


def test_confirm_attribute():
    prog = parse_program("followup confirm=yes ref=0 new=1 { is_medium(a) }")
    assert prog.confirm is True
    assert print_program(prog).startswith("followup confirm=yes")


def test_bare_acts():
    assert parse_program("yes").act is ProgramAct.CONFIRM_YES
    assert parse_program("no").confirm is False
    assert parse_program("end").act is ProgramAct.END


def test_syntax_error_position():
    with pytest.raises(DslSyntaxError) as err:
        parse_program("followup ref=x new=1 { is_small(a) }")
    assert err.value.line == 1
    assert err.value.column > 0


def test_semantic_errors():
    with pytest.raises(ProgramValidationError):
        parse_program("new new=1 { is_small(a, b) }")          # arity
    with pytest.raises(ProgramValidationError):
        parse_program("new new=1 { is_grey(b) }")              # undeclared variable
    with pytest.raises(ProgramValidationError):
        parse_program("new new=1 { is_below(a, ref) }")        # new has no ref
    with pytest.raises(ProgramValidationError):
        parse_program("followup new=1 { is_small(a) }")        # followup needs ref
    with pytest.raises(ProgramValidationError):
        validate_program(MeaningProgram(act=ProgramAct.NEW, new_dot_count=3))


_unary = st.sampled_from([PredicateId.IS_SMALL, PredicateId.IS_MEDIUM, PredicateId.IS_LARGE,
                          PredicateId.IS_DARK, PredicateId.IS_GREY, PredicateId.IS_LIGHT])
_spatial = st.sampled_from([PredicateId.IS_LEFT_OF, PredicateId.IS_RIGHT_OF,
                            PredicateId.IS_ABOVE, PredicateId.IS_BELOW, PredicateId.IS_NEAR])


@st.composite
def programs(draw):
    act = draw(st.sampled_from([ProgramAct.NEW, ProgramAct.FOLLOW_UP, ProgramAct.SELECT]))
    if act is ProgramAct.SELECT:
        new = 1
    elif act is ProgramAct.NEW:
        new = draw(st.integers(1, 2))
    else:
        new = draw(st.integers(0, 2))
    variables = ["a", "b"][:new]
    constraints = []
    for _ in range(draw(st.integers(0, 4))):
        if act is ProgramAct.SELECT or not variables:
            if not variables:
                break
            constraints.append(Constraint(draw(_unary), (draw(st.sampled_from(variables)),)))
            continue
        if draw(st.booleans()):
            constraints.append(Constraint(draw(_unary), (draw(st.sampled_from(variables)),)))
        else:
            first = draw(st.sampled_from(variables))
            seconds = [v for v in variables if v != first]
            if act is not ProgramAct.NEW:
                seconds.append("ref")
            if not seconds:
                continue
            constraints.append(Constraint(draw(_spatial), (first, draw(st.sampled_from(seconds)))))
    ref = draw(st.integers(0, 9)) if act is not ProgramAct.NEW else None
    confirm = draw(st.sampled_from([None, True, False]))
    return MeaningProgram(act=act, ref_turn=ref, new_dot_count=new,
                          constraints=tuple(constraints), confirm=confirm)


@settings(max_examples=300, deadline=None)
@given(programs())
def test_fuzzed_round_trip(prog):
    validate_program(prog)
    assert parse_program(print_program(prog)) == prog
