import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from quasidiff.extended import INF, NEG_INF
from quasidiff.triple_model import (
    AT, LEFT, RIGHT, DomainError, ScaleFunction, SpeedMeasure, Tail, check_hypotheses,
    classify_endpoint, decompose_scale, eval_scale, normalize_base, plateau_intervals,
)

from strategies import dm_measure, scales


def snapping_scale(kappa=2):
    return ScaleFunction.build([-1, 0, 1], [1, 1], origin=-1, jumps={0: (F(2) / kappa, 0)},
                               left_end=NEG_INF, right_end=INF)


# -- eval_scale ---------------------------------------------------------------

def test_identity_eval():
    assert eval_scale(ScaleFunction.identity(0, 1), F(1, 2)) == F(1, 2)


def test_snapping_out_one_sided_values():
    s = snapping_scale(2)
    assert [eval_scale(s, 0, side) for side in ("left", "at", "right")] == [0, 1, 1]


def test_divergent_boundary_evaluates_to_infinity():
    s = ScaleFunction.build([0, F(1, 2)], [1], right_end=1)
    assert eval_scale(s, 1) is INF
    assert s.right_divergent and not s.left_divergent


def test_outside_window_is_domain_error():
    s = ScaleFunction.identity(0, 1)
    with pytest.raises(DomainError):
        eval_scale(s, 2)


def test_affine_extension_to_infinite_edges():
    s = snapping_scale()
    assert eval_scale(s, NEG_INF) is NEG_INF and eval_scale(s, INF) is INF


def test_negative_slope_rejected():
    with pytest.raises(ValueError, match="monotonicity violated"):
        ScaleFunction.build([0, 1], [-1])


@given(scales())
def test_monotone_on_dense_sample(s):
    x0, xn = s.window
    rng = random.Random(0)
    pts = sorted(set(list(s.breakpoints) + [x0 + (xn - x0) * F(rng.randrange(1000), 999) for _ in range(60)]))
    seq = []
    for x in pts:
        seq += [eval_scale(s, x, side) for side in ("left", "at", "right")]
    assert all(a <= b for a, b in zip(seq, seq[1:]))


# -- decomposition -----------------------------------------------------------

def test_continuous_scale_has_empty_jump_measures():
    s = ScaleFunction.build([0, 1, 2], [1, 3])
    d = decompose_scale(s)
    assert d.mu_d_plus == () and d.mu_d_minus == ()
    assert d.continuous.values == s.values


def test_left_jump_decomposition():
    # s(x) = x for x < 1 and x + 1 for x >= 1
    s = ScaleFunction.build([0, 1, 2], [1, 1], jumps={1: (1, 0)}, base_point=F(1, 2))
    d = decompose_scale(s)
    assert d.mu_d_minus == ((1, 1),) and d.mu_d_plus == ()
    assert all(eval_scale(d.continuous, x) == x for x in (0, F(1, 2), 1, 2))


def test_symmetric_jump_in_both_sets():
    s = ScaleFunction.build([0, 2, 3], [F(1, 2), 1], jumps={2: (F(1, 2), F(1, 2))}, base_point=1)
    d = decompose_scale(s)
    assert d.mu_d_minus == ((2, F(1, 2)),) and d.mu_d_plus == ((2, F(1, 2)),)
    assert s.d_zero == (2,)


@given(scales())
def test_decomposition_round_trip(s):
    d = decompose_scale(s)
    rng = random.Random(1)
    x0, xn = s.window
    pts = list(s.breakpoints) + [x0 + (xn - x0) * F(rng.randrange(1, 10**6), 10**6) for _ in range(1000)]
    for x in pts:
        assert d.reconstruct(x) == eval_scale(s, x)
    # removing jumps can merge adjacent plateaus but never splits one
    merged = plateau_intervals(d.continuous)
    for p in plateau_intervals(s):
        assert any(q.c <= p.c and p.d <= q.d for q in merged)


@given(scales())
def test_jump_set_consistency(s):
    assert set(s.d_plus) | set(s.d_minus) == {j.x for j in s.jumps}
    assert set(s.d_zero) == {j.x for j in s.jumps if j.minus > 0 and j.plus > 0}


# -- plateaus ------------------------------------------------------------------

def test_example_plateau_not_isolated():
    s = ScaleFunction.build([0, 1, 2, 3], [1, 0, 1], jumps={2: (1, 0)})
    (p,) = plateau_intervals(s)
    assert (p.c, p.d) == (1, 2) and not p.isolated


def test_strictly_increasing_has_no_plateaus():
    assert plateau_intervals(ScaleFunction.build([0, 1, 2], [1, 2])) == ()


def test_depth_two_cantor_plateaus():
    from quasidiff.gallery import cantor_subspace
    s = cantor_subspace(2).scale
    assert [(p.c, p.d) for p in plateau_intervals(s)] == [
        (F(1, 9), F(2, 9)), (F(1, 3), F(2, 3)), (F(7, 9), F(8, 9))]


def test_consecutive_flat_pieces_merge():
    s = ScaleFunction.build([0, 1, 2, 3, 4], [1, 0, 0, 1])
    assert [(p.c, p.d) for p in plateau_intervals(s)] == [(1, 3)]


@given(scales())
def test_plateaus_disjoint_maximal_flat(s):
    ps = plateau_intervals(s)
    for p, q in zip(ps, ps[1:]):
        assert p.d <= q.c
    for p in ps:
        assert eval_scale(s, p.c, "right") == eval_scale(s, p.d, "left") == p.value
        # maximal: not extendable through a continuous breakpoint with zero slope
        if p.d < s.window[1] and s.is_continuity_point(p.d):
            assert s.slopes[s.breakpoints.index(p.d)] > 0


# -- endpoints -----------------------------------------------------------------

def test_lebesgue_on_unit_interval_both_reflecting():
    s, m = ScaleFunction.identity(0, 1), SpeedMeasure.lebesgue(0, 1)
    for side in (LEFT, RIGHT):
        rec = classify_endpoint(s, m, side)
        assert rec.approachable and rec.regular and rec.reflecting and rec.included_in_I


def test_divergent_right_not_approachable():
    s = ScaleFunction.build([0, F(1, 2)], [1], right_end=1)
    rec = classify_endpoint(s, SpeedMeasure.lebesgue(0, 1), RIGHT)
    assert not rec.approachable and not rec.regular and not rec.included_in_I


def test_infinite_boundary_atom_absorbs():
    rec = classify_endpoint(ScaleFunction.identity(0, 1), SpeedMeasure.lebesgue(0, 1, left_atom=INF), LEFT)
    assert rec.approachable and rec.regular and not rec.reflecting and not rec.included_in_I
    assert rec.absorbing


def test_heavy_tail_makes_endpoint_irregular():
    s = ScaleFunction.identity(0, 1)
    m = SpeedMeasure(density_pieces=((0, F(1, 2), 1),), right_tail=Tail(1, 1, F(1, 2), 1))
    assert not classify_endpoint(s, m, RIGHT).regular
    m = SpeedMeasure(density_pieces=((0, F(1, 2), 1),), right_tail=Tail(1, F(1, 2), F(1, 2), 1))
    assert classify_endpoint(s, m, RIGHT).regular


@given(st.sampled_from([0, 1, F(5, 2), INF]), st.sampled_from([0, F(1, 3), 4, INF]))
def test_boundary_mass_monotone(a, extra):
    s = ScaleFunction.identity(0, 1)
    before = classify_endpoint(s, SpeedMeasure.lebesgue(0, 1, left_atom=a), LEFT)
    after = classify_endpoint(s, SpeedMeasure.lebesgue(0, 1, left_atom=a + extra), LEFT)
    assert not (not before.reflecting and after.reflecting)


def test_divergence_never_creates_approachability():
    m = SpeedMeasure.lebesgue(0, 1)
    finite = classify_endpoint(ScaleFunction.identity(0, 1), m, RIGHT)
    diverged = classify_endpoint(ScaleFunction.build([0, F(1, 2)], [1], right_end=1), m, RIGHT)
    assert finite.approachable and not diverged.approachable


@given(scales())
def test_record_implications(s):
    m = dm_measure(s)
    for side in (LEFT, RIGHT):
        r = classify_endpoint(s, m, side)
        assert (not r.reflecting or r.regular) and (not r.regular or r.approachable)
        assert r.included_in_I == r.reflecting


# -- hypotheses ----------------------------------------------------------------

def test_snapping_out_satisfies_hypotheses():
    rep = check_hypotheses(snapping_scale(), SpeedMeasure.lebesgue(NEG_INF, INF))
    assert rep.dk_ok and rep.dm_ok


def test_null_interval_in_support_violates_dm():
    s = ScaleFunction.identity(0, 3)
    m = SpeedMeasure(density_pieces=((0, 1, 1), (2, 3, 1)))
    rep = check_hypotheses(s, m)
    assert not rep.dm_ok
    assert any(v.where == (1, 2) for v in rep.violations)


def test_two_sided_jump_needs_atom():
    s = ScaleFunction.build([0, 2, 3], [1, 1], jumps={2: (F(1, 2), F(1, 2))})
    rep = check_hypotheses(s, SpeedMeasure.lebesgue(0, 3))
    assert not rep.dm_ok
    assert any("atom required at isolated point" in v.message for v in rep.violations)
    assert check_hypotheses(s, SpeedMeasure.lebesgue(0, 3, atoms=((2, 1),))).dm_ok


def test_isolated_plateau_at_absorbing_endpoint_violates_dk():
    # plateau (0, 1) with a jump at 1: isolated; the left end is absorbing
    s = ScaleFunction.build([0, 1, 2], [0, 1], jumps={1: (1, 0)})
    m = SpeedMeasure.lebesgue(0, 2, left_atom=INF)
    rep = check_hypotheses(s, m)
    assert not rep.dk_ok


def test_open_j_interval_is_flagged():
    # plateau (1, 2) with 1 in D+ and 2 in D-: J is open on both sides
    s = ScaleFunction.build([0, 1, 2, 3], [1, 0, 1], jumps={1: (0, 1), 2: (1, 0)})
    rep = check_hypotheses(s, SpeedMeasure.lebesgue(0, 3))
    assert rep.notes and rep.dm_ok
    rep = check_hypotheses(s, SpeedMeasure(density_pieces=((0, 1, 1), (2, 3, 1))))
    assert not rep.dm_ok


# -- base point ----------------------------------------------------------------

def test_normalize_moves_off_a_jump():
    s = snapping_scale()
    out, shift = normalize_base(s, SpeedMeasure.lebesgue(NEG_INF, INF), 0)
    assert shift.moved and shift.base_point != 0
    assert all(eval_scale(out, shift.base_point, side) == 0 for side in ("left", "at", "right"))


def test_normalize_avoids_atoms():
    s = ScaleFunction.identity(-1, 1)
    m = SpeedMeasure.lebesgue(-1, 1, atoms=((0, 1),))
    out, shift = normalize_base(s, m, 0)
    assert shift.base_point != 0 and eval_scale(out, shift.base_point) == 0
