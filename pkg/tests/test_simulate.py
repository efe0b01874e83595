import warnings
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasidiff.form_assembly import TruncationWarning, atomize, simple_chain
from quasidiff.gallery import regular_diffusion
from quasidiff.regularize import LeftLimit, Real, star_space
from quasidiff.simulate import (
    CEMETERY, excursion_blocks, gap_crossing_continuity, holding_samples, holding_time_ks,
    is_skip_free, map_path, occupation_check, occupation_times, path_rng, sample_path,
    sample_paths, semigroup_consistency, strong_markov_witness,
)
from strategies import random_chain


def snap_chain(case, n=5):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        return atomize(case.regularize(), n, case.window)


def test_streams_are_independent_and_reproducible():
    a, b = path_rng(3, 0).random(5), path_rng(3, 0).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, path_rng(3, 1).random(5))
    assert not np.array_equal(a, path_rng(4, 0).random(5))


def test_same_seed_same_path(walk):
    ch = walk.chain()
    p, q = sample_path(ch, 1, 100.0, seed=9), sample_path(ch, 1, 100.0, seed=9)
    assert np.array_equal(p.times, q.times) and np.array_equal(p.states, q.states)


def test_path_structure(walk):
    p = sample_path(walk.chain(), 0, 50.0, seed=1)
    assert np.all(np.diff(p.times) > 0) and p.times[-1] < 50.0
    assert p.end_time == 50.0 and not p.absorbed
    assert p.state_at(0.0) == 0


def test_killed_path_ends_in_cemetery():
    ch = simple_chain((1, 1), (1,), kill=(2, 0))
    p = sample_path(ch, 1, 1e6, seed=0)
    assert p.absorbed and p.states[-1] == CEMETERY and p.end_time == p.times[-1]
    assert is_skip_free(p)


def test_event_cap_truncates():
    p = sample_path(regular_diffusion().chain(), 0, 1e9, max_events=100)
    assert p.truncated and p.n_events == 100


def test_occupation_sums_to_horizon(walk):
    p = sample_path(walk.chain(), 2, 200.0, seed=5)
    assert occupation_times(p, 3).sum() == pytest.approx(200.0)


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1))
def test_skip_free_any_seed(seed):
    ch = random_chain(np.random.default_rng(seed), 8, kill=True)
    assert is_skip_free(sample_path(ch, 3, 50.0, seed=seed))


def test_holding_times_exponential(walk):
    paths = sample_paths(walk.chain(), 1, 500.0, 20, seed=2)
    for state in range(3):
        rep = holding_time_ks(walk.chain(), paths, state)
        assert rep.passed, rep.details


def test_ks_rejects_wrong_rate(walk):
    # same paths tested against a chain whose middle holding mean is doubled
    paths = sample_paths(walk.chain(), 1, 500.0, 20, seed=2)
    fake = simple_chain((1, 2, 1), walk.chain().conductances)
    assert not holding_time_ks(fake, paths, 1).passed


def test_censored_sojourn_dropped(walk):
    p = sample_path(walk.chain(), 0, 5.0, seed=0)
    assert holding_samples(walk.chain(), [p], 0).sum() <= 5.0


def test_occupation_matches_masses(walk):
    rep = occupation_check(walk.chain(), 0, 1e4, seed=0)
    assert rep.passed and rep.max_residual < 0.05


def test_occupation_refuses_killing():
    with pytest.raises(ValueError, match="conservative"):
        occupation_check(simple_chain((1, 1), (1,), kill=(1, 0)), 0, 10.0)


def test_semigroup_consistency(walk):
    assert semigroup_consistency(walk.chain(), 0, 1.0, 4000, seed=1).passed


def test_dot_map_snapping(snapping):
    ch = snap_chain(snapping)
    reg = snapping.regularize()
    p = sample_path(ch, ch.index(0), 20.0, seed=3)
    mp = map_path(p, ch, reg, "dot")
    assert mp.positions[0] == 0 and mp.labels[0] == "left_limit"
    assert all(x is not None for x in mp.positions)


def test_star_map_keeps_scale_values(snapping):
    ch = snap_chain(snapping)
    reg = snapping.regularize()
    star = star_space(snapping.scale, snapping.measure)
    mp = map_path(sample_path(ch, ch.index(1), 5.0, seed=0), ch, reg, "star", star)
    assert mp.positions[0] == 1 and mp.labels[0] == "real"


def test_map_rejects_foreign_chain(snapping):
    # state 1/2 lies inside the snapping-out gap
    ch = simple_chain((1, 1), (1,), states=(F(-1), F(1, 2)))
    with pytest.raises(ValueError):
        map_path(sample_path(ch, 0, 1.0), ch, snapping.regularize(), "dot")


def test_dot_path_continuous_at_gaps(snapping):
    ch = snap_chain(snapping)
    rep = gap_crossing_continuity(sample_path(ch, ch.index(0), 500.0, seed=4), ch, snapping.regularize())
    assert rep.passed and rep.details["gap_crossings"] > 0


def test_continuity_needs_strict_scale(walk):
    with pytest.raises(ValueError):
        gap_crossing_continuity(sample_path(walk.chain(), 0, 1.0), walk.chain(), walk.regularize())


def test_excursions_single_signed(snapping):
    ch = snap_chain(snapping)
    rep = excursion_blocks(sample_path(ch, 0, 300.0, seed=6), ch)
    assert rep.single_signed and rep.crossings > 0
    assert len(rep.segment_blocks) == rep.crossings + 1
    assert all(a != b for a, b in zip(rep.segment_blocks, rep.segment_blocks[1:]))
    assert sum(rep.segment_lengths) == pytest.approx(300.0)


def test_strong_markov_witness(snapping):
    ch = snap_chain(snapping, 21)
    rep = strong_markov_witness(ch, snapping.regularize(), 0, horizon=2000.0, seed=0)
    assert rep.exact_tv == pytest.approx(float(F(4, 5)), abs=1e-12)
    assert rep.passed and min(rep.entries) > 100
    assert abs(rep.tv - rep.exact_tv) < 0.1


def test_witness_needs_split_position():
    with pytest.raises(ValueError):
        strong_markov_witness(regular_diffusion().chain(), regular_diffusion().regularize(), F(1, 2))


# -- further path examples ------------------------------------------------------

def single_state():
    from quasidiff.form_assembly import AtomicChain
    return AtomicChain((F(0),), (F(1),), ())


def test_single_state_path():
    p = sample_path(single_state(), 0, 7.0)
    assert p.n_events == 0 and occupation_times(p, 1)[0] == 7.0
    assert occupation_check(single_state(), 0, 7.0).max_residual == 0


def test_two_state_alternates():
    p = sample_path(simple_chain((1, 1), (1,)), 0, 100.0, seed=2)
    assert np.array_equal(p.states, np.arange(1, p.n_events + 1) % 2)


def test_walk_holding_mean_within_three_se(walk):
    x = holding_samples(walk.chain(), sample_paths(walk.chain(), 1, 4400.0, 10, seed=8), 1)
    assert len(x) >= 10_000
    se = x.std(ddof=1) / np.sqrt(len(x))
    assert abs(x.mean() - 4 / 3) < 3 * se


def test_occupation_two_state_and_walk(walk):
    assert occupation_check(simple_chain((1, 3), (1,)), 0, 1e5).passed
    assert occupation_check(walk.chain(), 0, 1e5).passed


def test_snapping_jump_maps_to_no_motion(snapping):
    ch = snap_chain(snapping)
    reg = snapping.regularize()
    star = star_space(snapping.scale, snapping.measure)
    p = sample_path(ch, ch.index(0), 1000.0, seed=0)
    seq = np.concatenate(([p.x0], p.states))
    k = next(j for j in range(1, len(seq)) if ch.states[seq[j - 1]] == 0 and ch.states[seq[j]] == 1)
    dot, stp = map_path(p, ch, reg, "dot"), map_path(p, ch, reg, "star", star)
    assert dot.positions[k - 1] == dot.positions[k] == 0
    assert (stp.points[k - 1], stp.points[k]) == (LeftLimit(0), Real(0))


def test_identity_scale_map_is_raw():
    case = regular_diffusion()
    ch = atomize(case.regularize(), 5)
    p = sample_path(ch, 2, 10.0, seed=1)
    mp = map_path(p, ch, case.regularize(), "dot")
    assert list(mp.positions) == [ch.states[i] for i in mp.indices]


def test_walk_map_tables(walk):
    ch, reg = walk.chain(), walk.regularize()
    star = star_space(walk.scale, walk.measure)
    p = sample_path(ch, 0, 50.0, seed=0)
    assert set(map_path(p, ch, reg, "dot").positions) == {0, 1, 2}
    assert set(map_path(p, ch, reg, "star", star).positions) == {0, 1, 3}


def test_excursion_without_crossing(snapping):
    ch = snap_chain(snapping)
    from quasidiff.simulate import Path
    p = Path(0, np.array([]), np.array([], dtype=np.int64), 1.0)
    rep = excursion_blocks(p, ch)
    assert rep.crossings == 0 and rep.segment_blocks == (0,) and rep.single_signed


def test_excursion_needs_one_gap(walk):
    with pytest.raises(ValueError):
        excursion_blocks(sample_path(walk.chain(), 0, 1.0), regular_diffusion().chain())


def test_crossing_count_long_run(snapping):
    ch = snap_chain(snapping)
    rep = excursion_blocks(sample_path(ch, ch.index(1), 1e4, seed=5), ch)
    assert 0 < rep.crossings < 10 ** 6 and rep.single_signed
