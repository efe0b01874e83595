import warnings
from fractions import Fraction as F

import pytest

from quasidiff.form_assembly import TruncationWarning
from quasidiff.gallery import (
    CASES, DERIVED, PUBLISHED, TRIVIAL, cantor_intervals, check_case, get_case, random_walk, snapping_out,
)


@pytest.mark.parametrize("name", sorted(CASES))
def test_case_facts_hold(name):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        checks = check_case(get_case(name))
    assert checks
    bad = [c for c in checks if not c.ok]
    assert not bad, bad


@pytest.mark.parametrize("name", sorted(CASES))
def test_every_fact_has_provenance(name):
    case = get_case(name)
    assert set(case.expected) == set(case.provenance)
    assert set(case.provenance.values()) <= {PUBLISHED, DERIVED, TRIVIAL}


def test_unknown_case():
    with pytest.raises(KeyError):
        get_case("nope")


def test_snapping_rejects_nonpositive_kappa():
    with pytest.raises(ValueError):
        snapping_out(0)


def test_cantor_interval_counts():
    removed, kept = cantor_intervals(3)
    assert len(removed) == 7 and len(kept) == 8
    assert sum(b - a for a, b in kept) == F(8, 27)
    _, fat = cantor_intervals(3, fat=True)
    assert sum(b - a for a, b in fat) == 1 - F(1, 4) - F(2, 16) - F(4, 64)


def test_walk_generalizes():
    case = random_walk((0, 2, 3, 7))
    assert case.expected["conductances"] == (F(1, 4), F(1, 2), F(1, 8))
    assert all(c.ok for c in check_case(case))


def test_snapping_kappa_four():
    reg = snapping_out(4).regularize()
    assert [(g.lo, g.hi) for g in reg.gaps] == [(0, F(1, 2))] and reg.gap_coefficients() == (1,)


def test_two_point_walk():
    assert random_walk((0, 5)).chain().conductances == (F(1, 10),)


def test_steeper_scale_halves_conductances():
    from quasidiff.gallery import regular_diffusion
    base = regular_diffusion(1).chain().conductances
    steep = regular_diffusion(2).chain().conductances
    assert steep == tuple(c / 2 for c in base)


def test_cantor_bm_depth_two_atoms():
    from quasidiff.gallery import cantor_bm
    atoms = dict(cantor_bm(2).regularize().m_hat.atoms)
    assert len(atoms) == 6
    assert atoms[F(1, 3)] == atoms[F(2, 3)] == F(1, 6)
    assert all(atoms[x] == F(1, 18) for x in (F(1, 9), F(2, 9), F(7, 9), F(8, 9)))


def test_cantor_bm_local_energy_fraction_vanishes():
    from quasidiff.form_assembly import assemble_form
    from quasidiff.gallery import cantor_bm
    fractions = []
    for d in (1, 2, 3, 4):
        case = cantor_bm(d)
        ch = case.chain()
        form = assemble_form(ch)
        f = list(ch.states)    # identity: total energy 1/2 per unit window
        terms = [c * (f[i + 1] - f[i]) ** 2 for i, c in enumerate(ch.conductances)]
        local = sum((t for i, t in enumerate(terms) if i not in ch.gap_edges), F(0))
        frac = local / form.energy(f)
        assert frac == case.metadata["local_fraction"] == F(2, 3) ** d
        fractions.append(frac)
    assert fractions == sorted(fractions, reverse=True)
