"""Worked triples with the regularization facts they are known to produce.

Each constructor states its expected facts from closed-form formulas, not from
the pipeline, so :func:`check_case` is a genuine end-to-end test.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .extended import INF, NEG_INF, as_number
from .form_assembly import absorption_probabilities, assemble_form, atomize, jump_rates
from .regularize import canonical_regularization, feller_classification, transience
from .triple_model import LEFT, RIGHT, ScaleFunction, SpeedMeasure, Tail, classify_endpoint

PUBLISHED, DERIVED, TRIVIAL = "published", "derived", "trivial"


@dataclass(frozen=True)
class GalleryCase:
    name: str
    scale: ScaleFunction
    measure: SpeedMeasure
    expected: dict
    provenance: dict
    n_per_block: int = 1
    window: Optional[tuple] = None
    override_hypotheses: bool = False
    metadata: dict = field(default_factory=dict)

    def regularize(self):
        return canonical_regularization(self.scale, self.measure, self.override_hypotheses)

    def chain(self):
        return atomize(self.regularize(), self.n_per_block, self.window)


def _q(x) -> Fraction:
    return Fraction(x) if not isinstance(x, Fraction) else x


# ---------------------------------------------------------------------------


def snapping_out(kappa=2) -> GalleryCase:
    """``s(x) = x`` for ``x < 0`` and ``x + 2/kappa`` for ``x >= 0``; Lebesgue speed."""
    kappa = _q(kappa)
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    g = 2 / kappa
    s = ScaleFunction.build([-1, 0, 1], [1, 1], origin=-1, jumps={0: (g, 0)},
                            left_end=NEG_INF, right_end=INF)
    m = SpeedMeasure.lebesgue(NEG_INF, INF)
    return GalleryCase(
        "snapping_out", s, m,
        expected={"gaps": ((Fraction(0), g),), "gap_coefficients": (kappa / 4,),
                  "transience": "recurrent", "hypotheses_ok": True},
        provenance={"gaps": PUBLISHED, "gap_coefficients": PUBLISHED, "transience": DERIVED,
                    "hypotheses_ok": PUBLISHED},
        n_per_block=5, window=(Fraction(-2), Fraction(3)), metadata={"kappa": kappa})


def random_walk(c=(0, 1, 3), m: Optional[SpeedMeasure] = None) -> GalleryCase:
    """Step scale ``s = c_n`` on ``[n, n+1)``: a birth-death chain on the values ``c``."""
    c = tuple(_q(v) for v in c)
    if len(c) < 2:
        raise ValueError("need at least two levels")
    if any(not a < b for a, b in zip(c, c[1:])):
        raise ValueError("levels c must be strictly increasing")
    q = len(c)
    xs = list(range(q + 1))
    jumps = {n: (c[n] - c[n - 1], 0) for n in range(1, q)}
    s = ScaleFunction.build(xs, [0] * q, origin=c[0], jumps=jumps)
    m = SpeedMeasure.lebesgue(0, q) if m is None else m
    masses = tuple(m.mass(n, n + 1, closed_left=True, closed_right=(n == q - 1))
                   + (m.left_atom if n == 0 else 0) + (m.right_atom if n == q - 1 else 0)
                   for n in range(q))
    conds = tuple(Fraction(1) / (2 * (b - a)) for a, b in zip(c, c[1:]))
    gaps = tuple(zip(c, c[1:]))
    hold, probs = [], []
    for n in range(q):
        ml = conds[n - 1] if n > 0 else Fraction(0)
        mr = conds[n] if n < q - 1 else Fraction(0)
        hold.append(masses[n] / (ml + mr))
        probs.append((ml / (ml + mr), mr / (ml + mr)))
    return GalleryCase(
        "random_walk", s, m,
        expected={"states": c, "masses": masses, "conductances": conds, "gaps": gaps,
                  "holding_means": tuple(hold), "jump_probabilities": tuple(probs),
                  "transience": "recurrent", "hypotheses_ok": True},
        provenance={k: PUBLISHED for k in ("states", "masses", "conductances", "holding_means",
                                       "jump_probabilities")} | {
            "gaps": DERIVED, "transience": DERIVED, "hypotheses_ok": DERIVED},
        n_per_block=1, metadata={"levels": c})


def cantor_intervals(depth: int, fat: bool = False):
    """Removed open intervals ``(c_n, d_n)`` of a depth-``depth`` construction of
    a Cantor set in ``[0, 1]``, and the kept closed intervals.

    Standard: remove middle thirds. Fat: at step ``n`` remove a centred interval
    of length ``4**-n`` from every kept interval.
    """
    if not 1 <= depth <= 12:
        raise ValueError("depth must be in 1..12")
    kept = [(Fraction(0), Fraction(1))]
    removed = []
    for n in range(1, depth + 1):
        nxt = []
        for a, b in kept:
            w = (b - a) / 3 if not fat else Fraction(1, 4 ** n)
            mid = (a + b) / 2
            c, d = mid - w / 2, mid + w / 2
            removed.append((c, d))
            nxt += [(a, c), (d, b)]
        kept = nxt
    return sorted(removed), kept


def _cantor_scale(removed, kept, periods=1) -> ScaleFunction:
    xs, slopes, jumps = [Fraction(0)], [], {}
    for p in range(periods):
        pieces = sorted([(a + p, b + p, 1) for a, b in kept] + [(c + p, d + p, 0) for c, d in removed])
        for a, b, slope in pieces:
            xs.append(b)
            slopes.append(slope)
            if slope == 0:
                jumps[b] = (b - a, 0)
    return ScaleFunction.build(xs, slopes, origin=0, jumps=jumps)


def cantor_subspace(depth: int = 2, fat: bool = False) -> GalleryCase:
    """``s = x`` on ``K_d``, ``s = c_n`` on ``(c_n, d_n)``; ``m`` = Lebesgue on ``K_d``."""
    removed, kept = cantor_intervals(depth, fat)
    s = _cantor_scale(removed, kept)
    m = SpeedMeasure(density_pieces=tuple((a, b, 1) for a, b in kept))
    measure_k = sum((b - a for a, b in kept), Fraction(0))
    return GalleryCase(
        "cantor_subspace_fat" if fat else "cantor_subspace", s, m,
        expected={"gaps": tuple(removed),
                  "gap_coefficients": tuple(Fraction(1) / (2 * (d - c)) for c, d in removed),
                  "blocks": tuple(kept), "total_mass": measure_k,
                  "total_gap_length": 1 - measure_k,
                  "transience": "recurrent", "hypotheses_ok": True},
        provenance={"gaps": DERIVED, "gap_coefficients": PUBLISHED, "blocks": DERIVED,
                    "total_mass": DERIVED, "total_gap_length": DERIVED,
                    "transience": DERIVED, "hypotheses_ok": PUBLISHED},
        n_per_block=2, metadata={"depth": depth, "fat": fat})


def cantor_bm(depth: int = 1, periods: int = 1) -> GalleryCase:
    """Periodized Cantor scale on the window ``[0, periods]`` with gap-end atoms
    of mass ``|d_n - c_n| / 2``; the window ends are reflecting."""
    removed, kept = cantor_intervals(depth)
    s = _cantor_scale(removed, kept, periods)
    gaps = sorted((c + p, d + p) for p in range(periods) for c, d in removed)
    blocks = sorted((a + p, b + p) for p in range(periods) for a, b in kept)
    atoms = {}
    for c, d in gaps:
        for x in (c, d):
            atoms[x] = atoms.get(x, 0) + (d - c) / 2
    m = SpeedMeasure(density_pieces=tuple((a, b, 1) for a, b in blocks), atoms=tuple(atoms.items()))
    lebesgue_k = sum((b - a for a, b in blocks), Fraction(0))
    return GalleryCase(
        "cantor_bm", s, m,
        expected={"gaps": tuple(gaps),
                  "gap_coefficients": tuple(Fraction(1) / (2 * (d - c)) for c, d in gaps),
                  "atoms": tuple(sorted(atoms.items())),
                  "transience": "recurrent", "hypotheses_ok": True},
        provenance={"gaps": DERIVED, "gap_coefficients": PUBLISHED, "atoms": PUBLISHED,
                    "transience": DERIVED, "hypotheses_ok": PUBLISHED},
        n_per_block=2,
        metadata={"depth": depth, "periods": periods,
                  "local_fraction": lebesgue_k / periods})


def regular_diffusion(slope=1, left=0, right=1) -> GalleryCase:
    """``s(x) = slope * x`` with Lebesgue speed on ``[left, right]``, both ends reflecting."""
    slope = _q(slope)
    s = ScaleFunction.build([left, right], [slope], origin=slope * _q(left))
    m = SpeedMeasure.lebesgue(left, right)
    name = "regular_diffusion" if slope == 1 else "scaled_diffusion"
    return GalleryCase(
        name, s, m,
        expected={"gaps": (), "transience": "recurrent", "hypotheses_ok": True,
                  "endpoints": ((True, True, True), (True, True, True)),
                  "feller": ("regular", "regular"),
                  "conductances": (Fraction(1, 2) / (slope * (_q(right) - _q(left))),)},
        provenance={"gaps": TRIVIAL, "transience": TRIVIAL, "hypotheses_ok": TRIVIAL,
                    "endpoints": TRIVIAL, "feller": TRIVIAL, "conductances": DERIVED},
        n_per_block=2, metadata={"slope": slope})


def absorbing_left() -> GalleryCase:
    """Identity scale on ``(0, 1]`` with an infinite atom at 0: absorbed at the left."""
    s = ScaleFunction.identity(0, 1)
    m = SpeedMeasure.lebesgue(0, 1, left_atom=INF)
    return GalleryCase(
        "absorbing_left", s, m,
        expected={"gaps": (), "transience": "transient", "hypotheses_ok": True,
                  "endpoints": ((True, True, False), (True, True, True)),
                  "absorption_probability": Fraction(1)},
        provenance={k: TRIVIAL for k in ("gaps", "transience", "hypotheses_ok", "endpoints")}
        | {"absorption_probability": DERIVED},
        n_per_block=8)


def divergent_right() -> GalleryCase:
    """``I = [0, 1)``, ``s(0) = 0``, ``s(1) = +inf``; the scale is explicit on ``[0, 1/2]``."""
    s = ScaleFunction.build([0, Fraction(1, 2)], [1], origin=0, right_end=1)
    m = SpeedMeasure.lebesgue(0, 1)
    return GalleryCase(
        "divergent_right", s, m,
        expected={"transience": "recurrent", "hypotheses_ok": True,
                  "endpoints": ((True, True, True), (False, False, False))},
        provenance={"transience": PUBLISHED, "hypotheses_ok": DERIVED, "endpoints": PUBLISHED},
        n_per_block=8, window=(Fraction(0), Fraction(1, 2)))


def feller_entrance() -> GalleryCase:
    """Right tail density ``y**-3`` on ``[1, inf)`` and nothing on ``(0, 1)``."""
    s = ScaleFunction.build([-1, 0, 1], [1, 1], origin=-1, right_end=INF, base_point=0)
    m = SpeedMeasure(density_pieces=((-1, 0, 1),), right_tail=Tail(1, 3, 1, INF))
    return GalleryCase(
        "feller_entrance", s, m,
        expected={"feller_right": "entrance", "lambda_right": Fraction(1), "sigma_right": INF},
        provenance={"feller_right": DERIVED, "lambda_right": DERIVED, "sigma_right": DERIVED},
        override_hypotheses=True)


def feller_exit() -> GalleryCase:
    """Right tail density ``(1 - y)**(-3/2)`` on ``(0, 1)``."""
    s = ScaleFunction.build([-1, 0, 1], [1, 1], origin=-1, base_point=0)
    m = SpeedMeasure(density_pieces=((-1, 0, 1),), right_tail=Tail(1, Fraction(3, 2), 0, 1))
    return GalleryCase(
        "feller_exit", s, m,
        expected={"feller_right": "exit", "sigma_right": 2.0, "lambda_right": INF},
        provenance={"feller_right": DERIVED, "sigma_right": DERIVED, "lambda_right": DERIVED},
        override_hypotheses=True)


def feller_natural() -> GalleryCase:
    """Lebesgue speed on ``[0, inf)`` with the identity scale."""
    s = ScaleFunction.build([0, 1], [1], origin=0, right_end=INF)
    m = SpeedMeasure.lebesgue(0, INF)
    return GalleryCase(
        "feller_natural", s, m,
        expected={"feller_right": "natural", "sigma_right": INF, "lambda_right": INF},
        provenance={"feller_right": TRIVIAL, "sigma_right": TRIVIAL, "lambda_right": TRIVIAL},
        n_per_block=8, window=(Fraction(0), Fraction(4)))


CASES: dict[str, Callable[[], GalleryCase]] = {
    "snapping_out": snapping_out,
    "random_walk": random_walk,
    "cantor_subspace": lambda: cantor_subspace(2),
    "cantor_subspace_fat": lambda: cantor_subspace(2, fat=True),
    "cantor_bm": lambda: cantor_bm(2),
    "regular_diffusion": regular_diffusion,
    "scaled_diffusion": lambda: regular_diffusion(2),
    "absorbing_left": absorbing_left,
    "divergent_right": divergent_right,
    "feller_entrance": feller_entrance,
    "feller_exit": feller_exit,
    "feller_natural": feller_natural,
}


def get_case(name: str) -> GalleryCase:
    try:
        return CASES[name]()
    except KeyError:
        raise KeyError(f"unknown gallery case {name!r}; known: {', '.join(CASES)}") from None


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FactCheck:
    fact: str
    expected: object
    observed: object
    provenance: str
    ok: bool


def _observe(case: GalleryCase, fact: str, cache: dict):
    if "reg" not in cache:
        cache["reg"] = case.regularize()
    reg = cache["reg"]

    def chain():
        if "chain" not in cache:
            cache["chain"] = atomize(reg, case.n_per_block, case.window)
        return cache["chain"]

    if fact == "gaps":
        return tuple((g.lo, g.hi) for g in reg.gaps)
    if fact == "gap_coefficients":
        return assemble_form(chain()).gap_coefficients
    if fact == "states":
        return chain().states
    if fact == "masses":
        return chain().masses
    if fact == "conductances":
        return chain().conductances
    if fact == "holding_means":
        return tuple(r.holding_mean for r in jump_rates(chain()))
    if fact == "jump_probabilities":
        return tuple((r.p_left, r.p_right) for r in jump_rates(chain()))
    if fact == "blocks":
        return tuple((b.lo, b.hi) for b in reg.blocks)
    if fact == "atoms":
        return reg.m_hat.atoms
    if fact == "total_mass":
        return sum(chain().masses, Fraction(0))
    if fact == "total_gap_length":
        return sum((g.length for g in reg.gaps), Fraction(0))
    if fact == "transience":
        return transience(reg).value
    if fact == "hypotheses_ok":
        return reg.hypotheses.ok
    if fact == "endpoints":
        return tuple((e.approachable, e.regular, e.reflecting) for e in reg.endpoints)
    if fact == "feller":
        return tuple(feller_classification(reg, side).verdict for side in (LEFT, RIGHT))
    if fact.startswith(("feller_", "sigma_", "lambda_")):
        kind, side = fact.split("_")
        rep = feller_classification(reg, side)
        return {"feller": rep.verdict, "sigma": rep.sigma, "lambda": rep.lam}[kind]
    if fact == "absorption_probability":
        h, _ = absorption_probabilities(chain())
        return min(h)
    raise KeyError(f"no observer for fact {fact!r}")


def _matches(expected, observed) -> bool:
    if isinstance(expected, float) or isinstance(observed, float):
        try:
            return abs(float(expected) - float(observed)) <= 1e-12 * max(1.0, abs(float(expected)))
        except TypeError:
            return False
    return expected == observed


def check_case(case: GalleryCase) -> tuple:
    """Run the pipeline and compare every expected fact."""
    cache: dict = {}
    out = []
    for fact, want in case.expected.items():
        got = _observe(case, fact, cache)
        ok = _matches(want, got) if fact != "absorption_probability" else abs(float(got) - 1) < 1e-10
        out.append(FactCheck(fact, want, got, case.provenance.get(fact, ""), bool(ok)))
    return tuple(out)
