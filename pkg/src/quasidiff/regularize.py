"""Canonical regularization, the completed-and-darned star space, and
endpoint classifications of the regularized process."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .extended import INF, NEG_INF, Ext, is_exact, is_finite, is_inf
from .triple_model import (
    AT,
    LEFT,
    RIGHT,
    CannotClassify,
    DomainError,
    EndpointRecord,
    HypothesisReport,
    ScaleFunction,
    SpeedMeasure,
    Tail,
    check_hypotheses,
    classify_endpoint,
    eval_scale,
    plateau_intervals,
)


class HypothesisRejected(ValueError):
    def __init__(self, report: HypothesisReport):
        self.report = report
        msgs = "; ".join(v.message for v in report.violations)
        super().__init__(f"hypotheses (DK)/(DM) fail: {msgs}")


@dataclass(frozen=True)
class Block:
    lo: Ext
    hi: Ext
    lo_closed: bool = True
    hi_closed: bool = True

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, v) -> bool:
        if v < self.lo or v > self.hi:
            return False
        if v == self.lo and not self.lo_closed:
            return False
        if v == self.hi and not self.hi_closed:
            return False
        return True


@dataclass(frozen=True)
class Gap:
    lo: Fraction
    hi: Fraction

    @property
    def length(self):
        return self.hi - self.lo


@dataclass(frozen=True)
class ImagePoint:
    """A point of the image closure with its source abscissa under ``r``."""

    value: Fraction
    x: Fraction
    kind: str          # real | left_limit | right_limit | darned
    image: bool        # value lies in s(I) rather than only in its closure


@dataclass(frozen=True)
class ImageSegment:
    """Open image ``(v_lo, v_hi)`` of a strictly increasing affine stretch."""

    v_lo: Ext
    v_hi: Ext
    x_lo: Ext
    x_hi: Ext
    slope: Optional[Fraction]   # None: continuation beyond the window is unspecified

    def to_value(self, x):
        if self.slope is None:
            raise DomainError("scale is unspecified beyond the window")
        if is_finite(self.x_lo) and is_finite(self.v_lo):
            return self.v_lo + self.slope * (x - self.x_lo)
        return self.v_hi - self.slope * (self.x_hi - x)

    def to_source(self, v):
        if self.slope is None:
            raise DomainError("scale is unspecified beyond the window")
        if is_finite(self.x_lo) and is_finite(self.v_lo):
            return self.x_lo + (v - self.v_lo) / self.slope
        return self.x_hi - (self.v_hi - v) / self.slope


@dataclass(frozen=True)
class RegularizedTriple:
    blocks: tuple
    gaps: tuple
    m_hat: SpeedMeasure
    l_hat: Ext
    r_hat: Ext
    l_included: bool
    r_included: bool
    points: tuple        # ImagePoint, sorted by value
    segments: tuple      # ImageSegment, sorted
    scale: ScaleFunction
    base: Fraction       # s(base point): origin of the sigma/lambda integrals
    known_range: tuple   # (lo, hi) in s-hat coordinates where m_hat is resolved
    endpoints: tuple     # (left EndpointRecord, right EndpointRecord)
    hypotheses: HypothesisReport

    @property
    def collapse_table(self) -> dict:
        return {p.value: p.x for p in self.points}

    def contains(self, v) -> bool:
        return any(b.contains(v) for b in self.blocks)

    def block_index(self, v) -> int:
        for i, b in enumerate(self.blocks):
            if b.contains(v):
                return i
        raise DomainError(f"{v} is not in the regularized state space")

    def point(self, v) -> Optional[ImagePoint]:
        for p in self.points:
            if p.value == v:
                return p
        return None

    def is_image(self, v) -> bool:
        """Whether ``v`` lies in ``s(I)`` (as opposed to a one-sided limit only)."""
        p = self.point(v)
        if p is not None:
            return p.image
        return any(seg.v_lo < v < seg.v_hi for seg in self.segments)

    def gap_coefficients(self) -> tuple:
        return tuple(Fraction(1, 2) / g.length if is_exact(g.length) else 0.5 / g.length
                     for g in self.gaps)

    def mass(self, lo, hi) -> Ext:
        """m_hat of the closed s-hat interval [lo, hi] intersected with I-hat."""
        total = self.m_hat.mass(lo, hi, closed_left=True, closed_right=True)
        if self.l_included and lo <= self.l_hat <= hi:
            total = total + self.m_hat.left_atom
        if self.r_included and lo <= self.r_hat <= hi:
            total = total + self.m_hat.right_atom
        return total


# ---------------------------------------------------------------------------


def plateau_representative(s: ScaleFunction, p) -> Fraction:
    """Source point standing for a plateau under ``r``: an end where ``s`` takes
    the plateau value (left end preferred), else the midpoint."""
    for x in (p.c, p.d):
        if s.values[s._index(x)][1] == p.value:
            return x
    return (p.c + p.d) / 2


def _image_parts(s: ScaleFunction):
    """Image points (deduplicated by value) and strictly increasing segments."""
    plats = plateau_intervals(s)
    in_plateau = {}
    for n, p in enumerate(plats):
        for k in p.pieces:
            in_plateau[k] = n
    rank = {"darned": 3, "real": 2, "left_limit": 1, "right_limit": 1}
    pts = {}

    def add(v, x, kind, image):
        old = pts.get(v)
        if old is None:
            pts[v] = ImagePoint(v, x, kind, image)
            return
        keep = old if rank[old.kind] >= rank[kind] else ImagePoint(v, x, kind, old.image)
        pts[v] = ImagePoint(v, keep.x, keep.kind, keep.image or image)

    xs = s.breakpoints
    for k, (x, (lv, pv, rv)) in enumerate(zip(xs, s.values)):
        if lv < pv:
            add(lv, x, "left_limit", False)
        add(pv, x, "real", True)
        if rv > pv:
            add(rv, x, "right_limit", False)
    for p in plats:
        add(p.value, plateau_representative(s, p), "darned", True)

    segs = []
    l, r = s.left_end, s.right_end
    if s.left_divergent:
        slope = s.slopes[0] if l == NEG_INF else None
        segs.append(ImageSegment(NEG_INF, s.values[0][1], l, xs[0], slope))
    for k, a in enumerate(s.slopes):
        if a > 0:
            segs.append(ImageSegment(s.values[k][2], s.values[k + 1][0], xs[k], xs[k + 1], a))
    if s.right_divergent:
        slope = s.slopes[-1] if r == INF else None
        segs.append(ImageSegment(s.values[-1][1], INF, xs[-1], r, slope))
    return tuple(sorted(pts.values(), key=lambda p: p.value)), tuple(segs), plats


def _merge_blocks(points, segments) -> list:
    parts = [(seg.v_lo, seg.v_hi) for seg in segments] + [(p.value, p.value) for p in points]
    parts.sort(key=lambda t: (t[0], t[1]))
    merged = []
    for lo, hi in parts:
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return [Block(lo, hi, is_finite(lo), is_finite(hi)) for lo, hi in merged]


def _push_tail(t: Tail, segments, s: ScaleFunction, side: str) -> Tail:
    lo, hi = t.interval
    for seg in segments:
        if seg.slope is None:
            continue
        if seg.x_lo <= lo and hi <= seg.x_hi:
            a = seg.slope
            p = t.exponent
            if is_exact(a) and is_exact(p) and Fraction(p).denominator == 1:
                coef = t.coef * Fraction(a) ** (int(p) - 1)
            else:
                coef = float(t.coef) * float(a) ** (float(p) - 1.0)
            edge = s.edge_value(side)
            anchor = seg.to_value(t.anchor)
            return Tail(coef, p, seg.to_value(t.start), edge, None if is_finite(edge) else anchor)
    raise CannotClassify("power tail must lie inside one strictly increasing affine piece")


def canonical_regularization(s: ScaleFunction, m: SpeedMeasure,
                             override_hypotheses: bool = False) -> RegularizedTriple:
    """Image triple ``(I-hat, s-hat, m-hat)`` with ``m-hat = m o s^{-1}``.

    Raises :class:`HypothesisRejected` when (DK)/(DM) fail, unless
    ``override_hypotheses`` is set, in which case the report rides along.
    """
    report = check_hypotheses(s, m)
    if not report.ok and not override_hypotheses:
        raise HypothesisRejected(report)
    left = classify_endpoint(s, m, LEFT)
    right = classify_endpoint(s, m, RIGHT)
    l_hat, r_hat = s.edge_value(LEFT), s.edge_value(RIGHT)
    points, segments, plats = _image_parts(s)

    blocks = _merge_blocks(points, segments)
    gaps = []
    if is_finite(l_hat) and not left.reflecting:
        first = blocks[0]
        if first.is_point:
            blocks.pop(0)
            nxt = blocks[0]
            gaps.append(Gap(l_hat, nxt.lo))
        else:
            blocks[0] = Block(first.lo, first.hi, False, first.hi_closed)
    tail_gap = None
    if is_finite(r_hat) and not right.reflecting:
        last = blocks[-1]
        if last.is_point:
            blocks.pop()
            tail_gap = Gap(blocks[-1].hi, r_hat)
        else:
            blocks[-1] = Block(last.lo, last.hi, last.lo_closed, False)
    for b1, b2 in zip(blocks, blocks[1:]):
        gaps.append(Gap(b1.hi, b2.lo))
    if tail_gap is not None:
        gaps.append(tail_gap)
    if not blocks:
        raise ValueError("regularized state space is empty")

    # push m forward through s
    density = []
    known_lo, known_hi = NEG_INF, INF
    for seg in segments:
        if seg.slope is None:
            if seg.v_lo == NEG_INF:
                known_lo = seg.v_hi
            else:
                known_hi = seg.v_lo
            continue
        for pa, pb, rho in m.density_pieces:
            lo, hi = max(pa, seg.x_lo), min(pb, seg.x_hi)
            if rho == 0 or not lo < hi:
                continue
            vlo = NEG_INF if is_inf(lo) else seg.to_value(lo)
            vhi = INF if is_inf(hi) else seg.to_value(hi)
            density.append((vlo, vhi, rho / seg.slope))

    atoms = {}
    l_atom = m.left_atom if left.reflecting else m.left_atom
    r_atom = m.right_atom
    extra_l = Fraction(0)
    extra_r = Fraction(0)

    def deposit(v, w):
        nonlocal extra_l, extra_r
        if v == l_hat:
            extra_l = extra_l + w
        elif v == r_hat:
            extra_r = extra_r + w
        else:
            atoms[v] = atoms.get(v, 0) + w

    x0, xn = s.window
    for x, w in m.atoms:
        if x == s.left_end:
            extra_l = extra_l + w
            continue
        if x == s.right_end:
            extra_r = extra_r + w
            continue
        if x0 <= x <= xn:
            deposit(eval_scale(s, x, AT), w)
            continue
        for seg in segments:
            if seg.x_lo < x < seg.x_hi and seg.slope is not None:
                deposit(seg.to_value(x), w)
    for p in plats:
        for k in p.pieces:
            w = m.mass(s.breakpoints[k], s.breakpoints[k + 1])
            if is_inf(w):
                raise CannotClassify(f"plateau ({p.c}, {p.d}) carries infinite mass")
            if w > 0:
                deposit(p.value, w)

    tails = {LEFT: None, RIGHT: None}
    for side, t in ((LEFT, m.left_tail), (RIGHT, m.right_tail)):
        if t is not None:
            tails[side] = _push_tail(t, segments, s, side)

    m_hat = SpeedMeasure(
        density_pieces=tuple(density),
        atoms=tuple(sorted(atoms.items())),
        left_atom=l_atom + extra_l,
        right_atom=r_atom + extra_r,
        left_tail=tails[LEFT],
        right_tail=tails[RIGHT],
    )
    return RegularizedTriple(
        blocks=tuple(blocks), gaps=tuple(gaps), m_hat=m_hat,
        l_hat=l_hat, r_hat=r_hat,
        l_included=left.reflecting, r_included=right.reflecting,
        points=points, segments=segments, scale=s,
        base=eval_scale(s, s.base_point),
        known_range=(known_lo, known_hi),
        endpoints=(left, right), hypotheses=report,
    )


def collapse_r(reg: RegularizedTriple, v) -> Fraction:
    """Source abscissa ``r(v)``: ``r(s(x)) = x`` and ``r(s(x+-)) = x``.

    A plateau's image collapses to :func:`plateau_representative`.
    """
    if not reg.contains(v):
        raise DomainError(f"{v} is not in the regularized state space")
    p = reg.point(v)
    if p is not None:
        return p.x
    for seg in reg.segments:
        if seg.v_lo < v < seg.v_hi:
            return seg.to_source(v)
    raise DomainError(f"no source point for {v}")


def source_to_hat(reg: RegularizedTriple, x, side: str = AT) -> Ext:
    """``s(x)`` including the affine continuation outside the breakpoint window."""
    x0, xn = reg.scale.window
    if x0 <= x <= xn or is_inf(x):
        return eval_scale(reg.scale, x, side)
    for seg in reg.segments:
        if seg.x_lo < x < seg.x_hi:
            return seg.to_value(x)
    raise DomainError(f"{x} is outside the state interval")


# ---------------------------------------------------------------------------
# star space


@dataclass(frozen=True)
class Real:
    x: Fraction
    label = "real"


@dataclass(frozen=True)
class LeftLimit:
    x: Fraction
    label = "left_limit"


@dataclass(frozen=True)
class RightLimit:
    x: Fraction
    label = "right_limit"


@dataclass(frozen=True)
class Darned:
    n: int
    c: Fraction
    d: Fraction
    label = "darned"


@dataclass(frozen=True)
class StarSegment:
    """Open stretch ``{Real(x): x_lo < x < x_hi}`` mapped affinely by ``s*``."""

    x_lo: Ext
    x_hi: Ext
    v_lo: Ext
    v_hi: Ext
    slope: Optional[Fraction]
    label = "real"

    def as_image_segment(self) -> ImageSegment:
        return ImageSegment(self.v_lo, self.v_hi, self.x_lo, self.x_hi, self.slope)


@dataclass(frozen=True)
class StarEntry:
    component: object     # StarSegment or a point variant
    v_lo: Ext
    v_hi: Ext
    included: bool        # belongs to I* (endpoints may be excluded)


@dataclass(frozen=True)
class StarSpace:
    entries: tuple

    @property
    def points(self) -> tuple:
        return tuple(e.component for e in self.entries if not isinstance(e.component, StarSegment))

    def s_star(self, p) -> Ext:
        for e in self.entries:
            c = e.component
            if isinstance(c, StarSegment):
                if isinstance(p, Real) and c.x_lo < p.x < c.x_hi:
                    return c.as_image_segment().to_value(p.x)
            elif c == p:
                return e.v_lo
        raise DomainError(f"{p} is not a point of the star space")

    def r_star(self, v):
        for e in self.entries:
            c = e.component
            if isinstance(c, StarSegment):
                if c.v_lo < v < c.v_hi:
                    return Real(c.as_image_segment().to_source(v))
            elif e.v_lo == v:
                return c
        raise DomainError(f"{v} is not in the closure of the scale image")


def star_space(s: ScaleFunction, m: SpeedMeasure) -> StarSpace:
    """Scale completion (split jump points into one-sided copies) followed by
    darning (collapse each plateau closure to one point), with ``s*`` values."""
    left = classify_endpoint(s, m, LEFT)
    right = classify_endpoint(s, m, RIGHT)
    plats = plateau_intervals(s)
    xs = s.breakpoints
    dminus, dplus = set(s.d_minus), set(s.d_plus)
    piece_plateau = {}
    for n, p in enumerate(plats):
        for k in p.pieces:
            piece_plateau[k] = n

    # per-breakpoint sub-points, in star order
    subs = []
    for k, (x, (lv, pv, rv)) in enumerate(zip(xs, s.values)):
        row = []
        if x in dminus:
            row.append((LeftLimit(x), lv))
        row.append((Real(x), pv))
        if x in dplus:
            row.append((RightLimit(x), rv))
        subs.append(row)
    swallowed = set()
    for n, p in enumerate(plats):
        i, j = p.pieces[0], p.pieces[-1] + 1
        swallowed.add((i, len(subs[i]) - 1))           # rightmost copy at c_n
        swallowed.add((j, 0))                          # leftmost copy at d_n
        for k in range(i + 1, j):
            for q in range(len(subs[k])):
                swallowed.add((k, q))

    entries = []
    if s.left_divergent:
        slope = s.slopes[0] if s.left_end == NEG_INF else None
        entries.append(StarEntry(StarSegment(s.left_end, xs[0], NEG_INF, s.values[0][1], slope),
                                 NEG_INF, s.values[0][1], True))
    last = len(xs) - 1
    for k in range(len(xs)):
        for q, (pt, v) in enumerate(subs[k]):
            if (k, q) in swallowed:
                continue
            inc = True
            if k == 0 and not s.left_divergent:
                inc = left.reflecting
            if k == last and not s.right_divergent:
                inc = right.reflecting
            entries.append(StarEntry(pt, v, v, inc))
        if k == last:
            break
        n = piece_plateau.get(k)
        if n is not None:
            p = plats[n]
            if k == p.pieces[0]:
                inc = True
                if p.c == s.left_end:
                    inc = inc and left.reflecting
                if p.d == s.right_end:
                    inc = inc and right.reflecting
                entries.append(StarEntry(Darned(n + 1, p.c, p.d), p.value, p.value, inc))
        elif s.slopes[k] > 0:
            seg = StarSegment(xs[k], xs[k + 1], s.values[k][2], s.values[k + 1][0], s.slopes[k])
            entries.append(StarEntry(seg, seg.v_lo, seg.v_hi, True))
    if s.right_divergent:
        slope = s.slopes[-1] if s.right_end == INF else None
        entries.append(StarEntry(StarSegment(xs[-1], s.right_end, s.values[-1][1], INF, slope),
                                 s.values[-1][1], INF, True))
    for e1, e2 in zip(entries, entries[1:]):
        if not e1.v_hi <= e2.v_lo or (e1.v_hi == e2.v_lo and not (
                isinstance(e1.component, StarSegment) or isinstance(e2.component, StarSegment))):
            raise AssertionError("s* is not strictly increasing in star order")
    return StarSpace(tuple(entries))


# ---------------------------------------------------------------------------
# global and boundary classification


class Recurrence(enum.Enum):
    TRANSIENT = "transient"
    RECURRENT = "recurrent"


def transience(reg: RegularizedTriple) -> Recurrence:
    """Transient iff a finite regularized endpoint is missing from ``I-hat``."""
    if (is_finite(reg.l_hat) and not reg.l_included) or (is_finite(reg.r_hat) and not reg.r_included):
        return Recurrence.TRANSIENT
    return Recurrence.RECURRENT


FELLER_VERDICTS = ("regular", "exit", "entrance", "natural")


@dataclass(frozen=True)
class FellerReport:
    side: str
    sigma: Ext
    lam: Ext
    verdict: str


def feller_verdict(sigma, lam) -> str:
    if is_finite(sigma) and is_finite(lam):
        return "regular"
    if is_finite(sigma):
        return "exit"
    if is_finite(lam):
        return "entrance"
    return "natural"


def feller_classification(reg: RegularizedTriple, side: str) -> FellerReport:
    """sigma-hat and lambda-hat at ``l-hat`` or ``r-hat`` by closed-form integration.

    ``sigma(x) = int_0^x m((0, y]) dy`` and ``lambda(x) = int_(0, x] y m(dy)``,
    measured from the base value; by Fubini both reduce to linear moments of
    ``m_hat`` on open intervals.
    """
    m, b = reg.m_hat, reg.base
    klo, khi = reg.known_range
    if side == RIGHT:
        e = reg.r_hat
        if e > khi:
            raise CannotClassify("speed measure near the right endpoint lies beyond the window")
        if is_inf(e):
            sigma = INF if m.mass(b, INF) > 0 else Fraction(0)
        else:
            sigma = m.integrate_linear(b, e, (e, -1))
        lam = m.integrate_linear(b, e, (-b, 1))
    elif side == LEFT:
        e = reg.l_hat
        if e < klo:
            raise CannotClassify("speed measure near the left endpoint lies beyond the window")
        if is_inf(e):
            sigma = INF if m.mass(NEG_INF, b) > 0 else Fraction(0)
        else:
            sigma = m.integrate_linear(e, b, (-e, 1))
        lam = m.integrate_linear(e, b, (b, -1))
    else:
        raise ValueError("side must be 'left' or 'right'")
    return FellerReport(side, sigma, lam, feller_verdict(sigma, lam))
