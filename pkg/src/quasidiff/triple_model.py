"""Raw triples (I, s, m): scale functions with jumps and plateaus, speed measures.

A :class:`ScaleFunction` is piecewise affine on a finite window of breakpoints
with explicit one-sided values at every breakpoint, so jumps are exact. An
endpoint lying outside the window is either an infinite endpoint reached by
extending the edge piece affinely, or a finite endpoint at which the scale
diverges (``s(l) = -inf`` / ``s(r) = +inf``).
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .extended import (
    INF,
    NEG_INF,
    Ext,
    as_number,
    close,
    is_finite,
    is_inf,
    power_integral,
)

LEFT, AT, RIGHT = "left", "at", "right"
SIDES = (LEFT, AT, RIGHT)


class DomainError(ValueError):
    """Evaluation point (or value) outside the domain of a map."""


class CannotClassify(ValueError):
    """Raised when a classification would require a guess."""


# ---------------------------------------------------------------------------
# scale functions


@dataclass(frozen=True)
class Jump:
    x: Fraction
    left_value: Fraction
    point_value: Fraction
    right_value: Fraction

    @property
    def minus(self):
        """``s(x) - s(x-)``, the mass of the left-jump measure at ``x``."""
        return self.point_value - self.left_value

    @property
    def plus(self):
        """``s(x+) - s(x)``."""
        return self.right_value - self.point_value


@dataclass(frozen=True)
class ScaleFunction:
    """Increasing scale function on ``<left_end, right_end>``.

    ``values[k]`` holds ``(s(x_k-), s(x_k), s(x_k+))``. Pieces between
    breakpoints are affine with slope ``slopes[k] >= 0``. Window edges carry
    no jump: the one-sided conventions ``s(l-) = s(l) = s(l+)`` apply there.
    """

    breakpoints: tuple
    slopes: tuple
    values: tuple
    left_end: Ext
    right_end: Ext
    base_point: Fraction = None

    def __post_init__(self):
        xs = tuple(as_number(x) for x in self.breakpoints)
        slopes = tuple(as_number(a) for a in self.slopes)
        vals = tuple(tuple(as_number(v) for v in triple) for triple in self.values)
        object.__setattr__(self, "breakpoints", xs)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "left_end", as_number(self.left_end))
        object.__setattr__(self, "right_end", as_number(self.right_end))
        if len(xs) < 2:
            raise ValueError("need at least two breakpoints")
        if len(slopes) != len(xs) - 1 or len(vals) != len(xs):
            raise ValueError("breakpoints/slopes/values length mismatch")
        if any(is_inf(x) for x in xs):
            raise ValueError("breakpoints must be finite")
        for a, b in zip(xs, xs[1:]):
            if not a < b:
                raise ValueError("breakpoints must be strictly increasing")
        for k, a in enumerate(slopes):
            if is_inf(a) or a < 0:
                raise ValueError(f"monotonicity violated: slope {a} on piece {k}")
        for k, (lv, pv, rv) in enumerate(vals):
            if any(is_inf(v) for v in (lv, pv, rv)):
                raise ValueError("breakpoint values must be finite")
            if not (lv <= pv <= rv):
                raise ValueError(f"monotonicity violated at breakpoint {xs[k]}")
        for k in (0, len(xs) - 1):
            lv, pv, rv = vals[k]
            if not (lv == pv == rv):
                raise ValueError("jumps are not allowed at window edges")
        for k, a in enumerate(slopes):
            expected = vals[k][2] + a * (xs[k + 1] - xs[k])
            if not close(expected, vals[k + 1][0]):
                raise ValueError(f"piece {k} does not reach s({xs[k + 1]}-)")
        l, r = self.left_end, self.right_end
        if not l <= xs[0] or not xs[-1] <= r:
            raise ValueError("window must lie inside [left_end, right_end]")
        if l == NEG_INF and slopes[0] == 0:
            raise ValueError("an infinite left endpoint needs a strictly increasing edge piece")
        if r == INF and slopes[-1] == 0:
            raise ValueError("an infinite right endpoint needs a strictly increasing edge piece")
        if vals[0][1] == vals[-1][1] and not (self.left_divergent or self.right_divergent):
            raise ValueError("scale function must be non-constant")
        if self.base_point is None:
            object.__setattr__(self, "base_point", self._default_base())
        else:
            b = as_number(self.base_point)
            object.__setattr__(self, "base_point", b)
            if not self.is_continuity_point(b):
                raise ValueError(f"base point {b} must be an interior continuity point")

    # -- construction ------------------------------------------------------

    @classmethod
    def build(cls, breakpoints, slopes, *, origin=0, jumps=None, left_end=None,
              right_end=None, base_point=None) -> "ScaleFunction":
        """Integrate slopes and jump sizes from ``s(x_0) = origin``.

        ``jumps`` maps an interior breakpoint to ``(s(x)-s(x-), s(x+)-s(x))``.
        """
        xs = [as_number(x) for x in breakpoints]
        slopes = [as_number(a) for a in slopes]
        jumps = {as_number(x): tuple(as_number(v) for v in sz) for x, sz in (jumps or {}).items()}
        for x in jumps:
            if x not in xs:
                raise ValueError(f"jump abscissa {x} is not a breakpoint")
        v = as_number(origin)
        vals = [(v, v, v)]
        for k, a in enumerate(slopes):
            left = vals[-1][2] + a * (xs[k + 1] - xs[k])
            minus, plus = jumps.get(xs[k + 1], (0, 0))
            if minus < 0 or plus < 0:
                raise ValueError("monotonicity violated: negative jump")
            vals.append((left, left + minus, left + minus + plus))
        return cls(tuple(xs), tuple(slopes), tuple(vals),
                   xs[0] if left_end is None else left_end,
                   xs[-1] if right_end is None else right_end,
                   base_point)

    @classmethod
    def identity(cls, left=0, right=1, **kw) -> "ScaleFunction":
        return cls.build([left, right], [1], origin=left, **kw)

    # -- derived views -----------------------------------------------------

    @property
    def window(self):
        return self.breakpoints[0], self.breakpoints[-1]

    @property
    def left_divergent(self) -> bool:
        """``s(l) = -inf``: the left endpoint lies beyond the window."""
        return self.left_end != self.breakpoints[0]

    @property
    def right_divergent(self) -> bool:
        return self.right_end != self.breakpoints[-1]

    @property
    def jumps(self) -> tuple:
        out = []
        for x, (lv, pv, rv) in zip(self.breakpoints, self.values):
            if lv != pv or pv != rv:
                out.append(Jump(x, lv, pv, rv))
        return tuple(out)

    @property
    def d_plus(self) -> tuple:
        return tuple(j.x for j in self.jumps if j.plus > 0)

    @property
    def d_minus(self) -> tuple:
        return tuple(j.x for j in self.jumps if j.minus > 0)

    @property
    def d_zero(self) -> tuple:
        return tuple(j.x for j in self.jumps if j.plus > 0 and j.minus > 0)

    @property
    def d_all(self) -> tuple:
        return tuple(j.x for j in self.jumps)

    def is_continuous(self) -> bool:
        return not self.jumps

    def is_strictly_increasing(self) -> bool:
        return all(a > 0 for a in self.slopes)

    def is_continuity_point(self, x) -> bool:
        x0, xn = self.window
        if not (x0 < x < xn) and not (x == x0 and self.left_divergent) and not (x == xn and self.right_divergent):
            return False
        k = self._index(x)
        if k is not None:
            lv, pv, rv = self.values[k]
            return lv == pv == rv
        return True

    def _index(self, x) -> Optional[int]:
        k = bisect.bisect_left(self.breakpoints, x)
        if k < len(self.breakpoints) and self.breakpoints[k] == x:
            return k
        return None

    def _default_base(self):
        # Nearest interior continuity point to 0 among breakpoints and piece midpoints.
        xs = self.breakpoints
        cands = list(xs) + [(a + b) / 2 for a, b in zip(xs, xs[1:])]
        cands = [c for c in cands if self.is_continuity_point(c)]
        if not cands:
            raise ValueError("no interior continuity point for the base point")
        return min(cands, key=lambda c: (abs(c), c))

    def piece_of(self, x) -> int:
        """Index k of the piece with ``x_k < x < x_{k+1}`` (x not a breakpoint)."""
        k = bisect.bisect_right(self.breakpoints, x) - 1
        if not 0 <= k < len(self.slopes):
            raise DomainError(f"{x} is outside the window {self.window}")
        return k

    def edge_value(self, side: str) -> Ext:
        """``s(l)`` or ``s(r)`` under the one-sided limit conventions."""
        if side == LEFT:
            return NEG_INF if self.left_divergent else self.values[0][1]
        return INF if self.right_divergent else self.values[-1][1]


def eval_scale(s: ScaleFunction, x, side: str = AT) -> Ext:
    """Return ``s(x-)``, ``s(x)`` or ``s(x+)``.

    Declared divergent boundaries evaluate to the infinity tags; any other
    point outside the breakpoint window is a :class:`DomainError`.
    """
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    x = as_number(x)
    if x == s.left_end and s.left_divergent:
        return NEG_INF
    if x == s.right_end and s.right_divergent:
        return INF
    x0, xn = s.window
    if is_inf(x) or not (x0 <= x <= xn):
        raise DomainError(f"{x} is outside the window [{x0}, {xn}]")
    k = s._index(x)
    if k is not None:
        return s.values[k][SIDES.index(side)]
    k = s.piece_of(x)
    return s.values[k][2] + s.slopes[k] * (x - s.breakpoints[k])


# ---------------------------------------------------------------------------
# decomposition s = s_c + s_d^+ + s_d^-


@dataclass(frozen=True)
class ScaleDecomposition:
    continuous: ScaleFunction
    mu_d_plus: tuple   # (x, s(x+) - s(x)) for x in D+
    mu_d_minus: tuple  # (x, s(x) - s(x-)) for x in D-
    base_point: Fraction

    def s_d_plus(self, x):
        b = self.base_point
        if x > b:
            return sum((w for y, w in self.mu_d_plus if b < y < x), Fraction(0))
        return -sum((w for y, w in self.mu_d_plus if x <= y < b), Fraction(0))

    def s_d_minus(self, x):
        b = self.base_point
        if x >= b:
            return sum((w for y, w in self.mu_d_minus if b < y <= x), Fraction(0))
        return -sum((w for y, w in self.mu_d_minus if x < y < b), Fraction(0))

    def reconstruct(self, x):
        return eval_scale(self.continuous, x) + self.s_d_plus(x) + self.s_d_minus(x)


def decompose_scale(s: ScaleFunction) -> ScaleDecomposition:
    """Split ``s`` into a continuous part and the two jump measures.

    Sums over jumps run from the base point, with the signed conventions
    ``mu((b, x)) := -mu([x, b))`` and ``mu((b, x]) := -mu((x, b))`` for ``x < b``.
    """
    plus = tuple((j.x, j.plus) for j in s.jumps if j.plus > 0)
    minus = tuple((j.x, j.minus) for j in s.jumps if j.minus > 0)
    partial = ScaleDecomposition(None, plus, minus, s.base_point)
    cvals = []
    for x, (_, pv, _) in zip(s.breakpoints, s.values):
        v = pv - partial.s_d_plus(x) - partial.s_d_minus(x)
        cvals.append((v, v, v))
    sc = ScaleFunction(s.breakpoints, s.slopes, tuple(cvals), s.left_end, s.right_end,
                       s.base_point)
    return ScaleDecomposition(sc, plus, minus, s.base_point)


# ---------------------------------------------------------------------------
# plateaus


@dataclass(frozen=True)
class Plateau:
    c: Fraction
    d: Fraction
    value: Fraction
    isolated: bool
    pieces: tuple  # indices of the constant pieces it spans


def plateau_intervals(s: ScaleFunction) -> tuple:
    """Maximal open intervals of constancy ``(c_n, d_n)`` of ``s``.

    ``isolated`` holds iff both ends lie in ``D`` or are endpoints ``l``/``r``.
    """
    xs = s.breakpoints
    out = []
    k = 0
    n = len(s.slopes)
    while k < n:
        if s.slopes[k] != 0:
            k += 1
            continue
        start = k
        while k + 1 < n and s.slopes[k + 1] == 0:
            lv, pv, rv = s.values[k + 1]
            if not (lv == pv == rv):
                break
            k += 1
        c, d = xs[start], xs[k + 1]
        ends = set(s.d_all)
        edge = {s.left_end, s.right_end}
        iso = (c in ends or c in edge) and (d in ends or d in edge)
        out.append(Plateau(c, d, s.values[start][2], iso, tuple(range(start, k + 1))))
        k += 1
    return tuple(out)


# ---------------------------------------------------------------------------
# speed measures


@dataclass(frozen=True)
class Tail:
    """Density ``coef * |y - anchor|**(-exponent)`` between ``start`` and ``edge``.

    ``anchor`` defaults to the edge when the edge is finite and to 0 otherwise.
    """

    coef: Fraction
    exponent: Fraction
    start: Fraction
    edge: Ext
    anchor: Optional[Fraction] = None

    def __post_init__(self):
        for name in ("coef", "exponent", "start", "edge"):
            object.__setattr__(self, name, as_number(getattr(self, name)))
        if self.anchor is None:
            object.__setattr__(self, "anchor", self.edge if is_finite(self.edge) else Fraction(0))
        else:
            object.__setattr__(self, "anchor", as_number(self.anchor))
        if self.coef <= 0:
            raise ValueError("tail coefficient must be positive")
        if is_inf(self.start):
            raise ValueError("tail start must be finite")
        if is_finite(self.edge) and self.anchor != self.edge:
            raise ValueError("a finite-edge tail is anchored at its edge")
        lo, hi = self.interval
        if not lo < hi:
            raise ValueError("tail interval is empty")
        if is_inf(self.edge) and not (lo > self.anchor if self.edge == INF else hi < self.anchor):
            raise ValueError("tail interval must not contain its anchor")

    @property
    def interval(self):
        return (self.start, self.edge) if self.edge > self.start else (self.edge, self.start)

    def integral(self, a, b, linear=(1, 0)) -> Ext:
        """``int_{(a,b) cap tail} (alpha + beta*y) * density dy`` in closed form."""
        lo, hi = self.interval
        a, b = max(a, lo), min(b, hi)
        if not a < b:
            return Fraction(0)
        alpha, beta = linear
        a, b = as_number(a), as_number(b)
        # y = anchor + sgn * w with w >= 0 on the tail side
        sgn = 1 if lo >= self.anchor else -1
        w1, w2 = sorted((abs(a - self.anchor) if is_finite(a) else INF,
                         abs(b - self.anchor) if is_finite(b) else INF))
        const = alpha + beta * self.anchor
        slope = beta * sgn
        total = Fraction(0)
        for coeff, q in ((const, -self.exponent), (slope, 1 - self.exponent)):
            if coeff == 0:
                continue
            term = power_integral(self.coef, q, w1, w2)
            if is_inf(term):
                return INF
            total = total + coeff * term
        return total


@dataclass(frozen=True)
class SpeedMeasure:
    """Piecewise-constant densities + atoms + boundary atoms + power tails."""

    density_pieces: tuple = ()
    atoms: tuple = ()
    left_atom: Ext = Fraction(0)
    right_atom: Ext = Fraction(0)
    left_tail: Optional[Tail] = None
    right_tail: Optional[Tail] = None

    def __post_init__(self):
        pieces = []
        for a, b, rho in self.density_pieces:
            a, b, rho = as_number(a), as_number(b), as_number(rho)
            if not a < b:
                raise ValueError("density piece with empty interval")
            if is_inf(rho) or rho < 0:
                raise ValueError("negative masses are not allowed (density)")
            pieces.append((a, b, rho))
        atoms = {}
        for x, w in self.atoms:
            x, w = as_number(x), as_number(w)
            if is_inf(x):
                raise ValueError("interior atoms must sit at finite points")
            if is_inf(w):
                raise ValueError("interior atoms must be finite (Radon)")
            if w < 0:
                raise ValueError("negative masses are not allowed (atom)")
            if w > 0:
                atoms[x] = atoms.get(x, 0) + w
        object.__setattr__(self, "density_pieces", tuple(sorted(pieces, key=lambda p: (p[0], p[1]))))
        object.__setattr__(self, "atoms", tuple(sorted(atoms.items())))
        for name in ("left_atom", "right_atom"):
            v = as_number(getattr(self, name))
            if v < 0:
                raise ValueError("negative masses are not allowed (boundary atom)")
            object.__setattr__(self, name, v)

    @classmethod
    def lebesgue(cls, a, b, **kw) -> "SpeedMeasure":
        return cls(density_pieces=((a, b, 1),), **kw)

    def density_at(self, x):
        return sum((rho for a, b, rho in self.density_pieces if a < x < b), Fraction(0))

    def atom_at(self, x):
        for y, w in self.atoms:
            if y == x:
                return w
        return Fraction(0)

    def tails(self):
        return tuple(t for t in (self.left_tail, self.right_tail) if t is not None)

    def mass(self, a, b, closed_left=False, closed_right=False) -> Ext:
        """Mass of the interval between ``a`` and ``b`` (boundary atoms excluded)."""
        return self.integrate_linear(a, b, (1, 0), closed_left, closed_right)

    def integrate_linear(self, a, b, linear=(1, 0), closed_left=False, closed_right=False) -> Ext:
        """``int (alpha + beta*y) m(dy)`` over the interval; integrand assumed >= 0 there."""
        alpha, beta = linear
        a, b = as_number(a), as_number(b)
        if not a <= b:
            return Fraction(0)
        total = Fraction(0)
        for pa, pb, rho in self.density_pieces:
            lo, hi = max(a, pa), min(b, pb)
            if rho == 0 or not lo < hi:
                continue
            if is_inf(lo) or is_inf(hi):
                return INF
            total = total + rho * (alpha * (hi - lo) + beta * (hi * hi - lo * lo) / 2)
        for x, w in self.atoms:
            inside = (a < x < b) or (closed_left and x == a) or (closed_right and x == b)
            if inside:
                total = total + w * (alpha + beta * x)
        for t in self.tails():
            val = t.integral(a, b, linear)
            if is_inf(val):
                return INF
            total = total + val
        return total

    def support_pieces(self) -> list:
        """Closed intervals / points carrying positive mass (boundary atoms excluded)."""
        out = [(a, b) for a, b, rho in self.density_pieces if rho > 0]
        out += [t.interval for t in self.tails()]
        out += [(x, x) for x, _ in self.atoms]
        return sorted(out, key=lambda p: (p[0], p[1]))


def _edge_mass_finite(m: SpeedMeasure, side: str, edge: Ext) -> bool:
    # m(l+) < inf  <=>  m((l, l+eps)) < inf for some eps; decided from pieces and tails.
    tail = m.left_tail if side == LEFT else m.right_tail
    if tail is not None:
        p = tail.exponent
        if is_finite(edge) and p >= 1:
            return False
        if is_inf(edge) and p <= 1:
            return False
    if is_inf(edge):
        for a, b, rho in m.density_pieces:
            if rho > 0 and (a == edge or b == edge):
                return False
    return True


@dataclass(frozen=True)
class EndpointRecord:
    side: str
    approachable: bool
    regular: bool
    reflecting: bool
    included_in_I: bool

    @property
    def absorbing(self) -> bool:
        return self.regular and not self.reflecting


def classify_endpoint(s: ScaleFunction, m: SpeedMeasure, side: str) -> EndpointRecord:
    """Approachable / regular / reflecting classification of ``l`` or ``r``."""
    if side not in (LEFT, RIGHT):
        raise ValueError("side must be 'left' or 'right'")
    edge = s.left_end if side == LEFT else s.right_end
    approachable = is_finite(s.edge_value(side))
    regular = approachable and _edge_mass_finite(m, side, edge)
    atom = m.left_atom if side == LEFT else m.right_atom
    reflecting = regular and is_finite(atom)
    return EndpointRecord(side, approachable, regular, reflecting, reflecting)


# ---------------------------------------------------------------------------
# hypotheses (DK) and (DM)


@dataclass(frozen=True)
class Violation:
    kind: str
    where: tuple
    message: str


@dataclass(frozen=True)
class HypothesisReport:
    dk_ok: bool
    dm_ok: bool
    violations: tuple = ()
    notes: tuple = ()

    @property
    def ok(self) -> bool:
        return self.dk_ok and self.dm_ok


def _null_intervals(s: ScaleFunction, m: SpeedMeasure) -> list:
    """Maximal open m-negligible intervals inside (l, r)."""
    l, r = s.left_end, s.right_end
    merged = []
    for a, b in m.support_pieces():
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    out = []
    cursor = l
    for a, b in merged:
        if a > cursor:
            out.append((cursor, a))
        cursor = max(cursor, b)
    if cursor < r:
        out.append((cursor, r))
    return out


def check_hypotheses(s: ScaleFunction, m: SpeedMeasure) -> HypothesisReport:
    """Report on (DK) and (DM); never raises for a failed hypothesis."""
    violations, notes = [], []
    plats = plateau_intervals(s)
    left = classify_endpoint(s, m, LEFT)
    right = classify_endpoint(s, m, RIGHT)
    dk_ok = True
    for p in plats:
        if not p.isolated:
            continue
        for end, rec in ((s.left_end, left), (s.right_end, right)):
            if end in (p.c, p.d) and not rec.reflecting:
                dk_ok = False
                violations.append(Violation(
                    "DK", (p.c, p.d),
                    f"endpoint {end} of isolated plateau ({p.c}, {p.d}) is not reflecting"))

    dm_ok = True
    for a, b in _null_intervals(s, m):
        if not any(p.c <= a and b <= p.d for p in plats):
            dm_ok = False
            violations.append(Violation(
                "DM", (a, b), f"m-negligible interval ({a}, {b}) meets supp[s]"))
    for x in s.d_zero:
        if m.atom_at(x) <= 0:
            dm_ok = False
            violations.append(Violation(
                "DM", (x,), f"atom required at isolated point {x}"))
    dplus, dminus = set(s.d_plus), set(s.d_minus)
    for p in plats:
        if not p.isolated:
            continue
        inc_c, inc_d = p.c not in dplus, p.d not in dminus
        mass = m.mass(p.c, p.d, closed_left=inc_c, closed_right=inc_d)
        if inc_c and p.c == s.left_end:
            mass = mass + m.left_atom
        if inc_d and p.d == s.right_end:
            mass = mass + m.right_atom
        if not inc_c and not inc_d:
            notes.append(f"plateau ({p.c}, {p.d}) has J open on both sides; literal m(J) > 0 applied")
        if not mass > 0:
            dm_ok = False
            violations.append(Violation(
                "DM", (p.c, p.d), f"isolated plateau ({p.c}, {p.d}) carries no mass on J"))
    return HypothesisReport(dk_ok, dm_ok, tuple(violations), tuple(notes))


# ---------------------------------------------------------------------------
# base-point normalization


@dataclass(frozen=True)
class BaseShift:
    requested: Fraction
    base_point: Fraction
    value_offset: Fraction

    @property
    def moved(self) -> bool:
        return self.requested != self.base_point or self.value_offset != 0


def normalize_base(s: ScaleFunction, m: SpeedMeasure, requested=0):
    """Move the base point to a continuity point of ``s`` carrying no atom and
    shift values so the scale vanishes there.

    Returns ``(normalized scale, BaseShift)``.
    """
    requested = as_number(requested)
    atoms = {x for x, _ in m.atoms}

    def ok(x):
        return s.is_continuity_point(x) and x not in atoms

    if ok(requested):
        base = requested
    else:
        # breakpoints may all be atoms or jumps; finitely many atoms, so a
        # few subdivision points per piece always contain an admissible one
        xs = [x for x in s.breakpoints if is_finite(x)]
        cands = list(xs)
        for a, b in zip(xs, xs[1:]):
            cands += [a + (b - a) * Fraction(k, 8) for k in range(1, 8)]
        cands = [c for c in cands if ok(c)]
        if not cands:
            raise ValueError("no admissible base point")
        base = min(cands, key=lambda c: (abs(c - requested), c))
    offset = eval_scale(s, base)
    vals = tuple(tuple(v - offset for v in t) for t in s.values)
    out = ScaleFunction(s.breakpoints, s.slopes, vals, s.left_end, s.right_end, base)
    return out, BaseShift(requested, base, offset)
