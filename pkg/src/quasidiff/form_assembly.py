"""Atomized chains on the regularized state space and the linear algebra on them.

Adjacent chain states are joined by conductance ``1/(2*delta)``; on a gap the
same formula produces the gap term of the energy, so one rule covers both.
Excluded finite endpoints become a killing conductance to a cemetery.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy import linalg, sparse, stats

from .extended import INF, NEG_INF, fmt, is_exact, is_finite, is_inf
from .regularize import RegularizedTriple, collapse_r, source_to_hat

REFLECTING, ABSORBING, TRUNCATED = "reflecting", "absorbing", "truncated"
MAX_DENSE = 2000


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class AtomicChain:
    states: tuple
    masses: tuple
    conductances: tuple             # mu_{i,i+1}, length n-1
    kill: tuple = (Fraction(0), Fraction(0))   # conductance to the cemetery at each side
    boundary: tuple = (REFLECTING, REFLECTING)
    gap_edges: tuple = ()           # indices i of edges (i, i+1) spanning a gap
    notes: tuple = ()

    def __post_init__(self):
        n = len(self.states)
        if n == 0:
            raise ValueError("chain has no states")
        if len(self.masses) != n or len(self.conductances) != n - 1:
            raise ValueError("states/masses/conductances length mismatch")
        if any(not w > 0 for w in self.masses):
            raise ValueError("every chain state needs positive mass")
        if any(not c > 0 for c in self.conductances):
            raise ValueError("conductances must be positive")
        if any(k < 0 for k in self.kill):
            raise ValueError("killing conductance must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def conservative(self) -> bool:
        return all(k == 0 for k in self.kill)

    @property
    def exact(self) -> bool:
        return all(is_exact(v) for v in (*self.masses, *self.conductances, *self.kill))

    def kill_vector(self):
        kv = [Fraction(0)] * self.n
        kv[0] = kv[0] + self.kill[0]
        kv[-1] = kv[-1] + self.kill[1]
        return kv

    def mu_left(self, i):
        return self.conductances[i - 1] if i > 0 else Fraction(0)

    def mu_right(self, i):
        return self.conductances[i] if i < self.n - 1 else Fraction(0)

    def total_mass(self):
        return sum(self.masses, Fraction(0))

    def index(self, v) -> int:
        for i, x in enumerate(self.states):
            if x == v:
                return i
        raise KeyError(f"{v} is not a chain state")


def simple_chain(masses, conductances, kill=(0, 0), states=None) -> AtomicChain:
    """Chain from raw masses and conductances (states default to 0..n-1)."""
    masses = tuple(Fraction(w) if isinstance(w, int) else w for w in masses)
    n = len(masses)
    states = tuple(range(n)) if states is None else tuple(states)
    bc = tuple(ABSORBING if k else REFLECTING for k in kill)
    return AtomicChain(states, masses, tuple(conductances), tuple(kill), bc)


# ---------------------------------------------------------------------------
# atomization


def _grid(lo, hi, lo_closed, hi_closed, n):
    span = hi - lo
    if lo_closed and hi_closed:
        n = max(n, 2)
        return [lo + span * k / (n - 1) for k in range(n)]
    if lo_closed:
        return [lo + span * k / n for k in range(n)]
    if hi_closed:
        return [lo + span * k / n for k in range(1, n + 1)]
    return [lo + span * k / (n + 1) for k in range(1, n + 1)]


def _exit_cell(reg, m, a, b, p, k, npts, lc, hc, bi, nblocks):
    # infinite mass is only allowed toward an excluded endpoint (exit boundary);
    # the cell is cut at its state and killing stands in for the rest
    if bi == 0 and k == 0 and not lc and a == reg.l_hat and not reg.l_included:
        w = m.mass(p, b, closed_left=True, closed_right=k < npts - 1 or hc)
    elif bi == nblocks - 1 and k == npts - 1 and not hc and b == reg.r_hat and not reg.r_included:
        w = m.mass(a, p, closed_left=k > 0 or lc, closed_right=True)
    else:
        w = INF
    if is_inf(w):
        raise ValueError(f"chain cell around {p} carries infinite mass")
    return w


def atomize(reg: RegularizedTriple, n_per_block: int = 1, window=None) -> AtomicChain:
    """Finite birth-death chain approximating the regularized process.

    ``window`` is a source interval ``(a, b)`` mapped through the scale; it is
    required when a block is unbounded. Each state gets the m-hat mass of its
    Voronoi cell inside its block, atoms of m-hat become states, and a window
    cut becomes a reflecting wall flagged ``truncated``.
    """
    if n_per_block < 1:
        raise ValueError("n_per_block must be >= 1")
    m = reg.m_hat
    notes = []
    if window is None:
        wlo, whi = NEG_INF, INF
    else:
        a, b = window
        wlo = source_to_hat(reg, a) if is_finite(a) else NEG_INF
        whi = source_to_hat(reg, b) if is_finite(b) else INF
    klo, khi = reg.known_range
    if wlo < klo or whi > khi:
        raise ValueError("window reaches where the speed measure is unspecified")

    pieces = []   # (lo, hi, lo_closed, hi_closed)
    cut = [False, False]
    for blk in reg.blocks:
        lo, hi, lc, hc = blk.lo, blk.hi, blk.lo_closed, blk.hi_closed
        if hi < wlo or lo > whi:
            cut[0] |= hi < wlo
            cut[1] |= lo > whi
            continue
        if lo < wlo:
            lo, lc, cut[0] = wlo, True, True
        if hi > whi:
            hi, hc, cut[1] = whi, True, True
        if lo == hi and not (lc and hc):
            continue
        if is_inf(lo) or is_inf(hi):
            raise ValueError("unbounded block: an atomization window is required")
        pieces.append((lo, hi, lc, hc))
    if not pieces:
        raise ValueError("regularized state space does not meet the window")

    atom_x = [x for x, _ in m.atoms]
    states, masses, block_of = [], [], []
    for bi, (lo, hi, lc, hc) in enumerate(pieces):
        if lo == hi:
            pts = [lo]
        else:
            pts = _grid(lo, hi, lc, hc, n_per_block)
            pts = sorted(set(pts) | {x for x in atom_x if lo < x < hi})
        cells = [lo] + [(p + q) / 2 for p, q in zip(pts, pts[1:])] + [hi]
        for k, p in enumerate(pts):
            w = reg.mass(cells[k], cells[k + 1]) if p == cells[k] == cells[k + 1] else None
            if w is None:
                a, b = cells[k], cells[k + 1]
                w = m.mass(a, b, closed_left=(k > 0 or lc), closed_right=(k < len(pts) - 1 or hc))
                if k == 0 and lc and a == reg.l_hat and reg.l_included:
                    w = w + m.left_atom
                if k == len(pts) - 1 and hc and b == reg.r_hat and reg.r_included:
                    w = w + m.right_atom
            if is_inf(w):
                w = _exit_cell(reg, m, cells[k], cells[k + 1], p, k, len(pts), lc, hc, bi, len(pieces))
                notes.append(f"exit boundary: mass beyond the outermost state {fmt(p)} dropped")
            states.append(p)
            masses.append(w)
            block_of.append(bi)
    if any(not w > 0 for w in masses):
        bad = [p for p, w in zip(states, masses) if not w > 0]
        raise ValueError(f"zero-mass chain states at {bad}")

    conds, gap_edges = [], []
    half = Fraction(1, 2)
    for i in range(len(states) - 1):
        d = states[i + 1] - states[i]
        conds.append(half / d if is_exact(d) else 0.5 / d)
        if block_of[i] != block_of[i + 1]:
            gap_edges.append(i)

    kill = [Fraction(0), Fraction(0)]
    bc = [REFLECTING, REFLECTING]
    first_lo, last_hi = pieces[0][0], pieces[-1][1]
    if cut[0]:
        bc[0] = TRUNCATED
    elif is_finite(reg.l_hat) and not reg.l_included:
        d = states[0] - reg.l_hat
        kill[0] = half / d if is_exact(d) else 0.5 / d
        bc[0] = ABSORBING
    if cut[1]:
        bc[1] = TRUNCATED
    elif is_finite(reg.r_hat) and not reg.r_included:
        d = reg.r_hat - states[-1]
        kill[1] = half / d if is_exact(d) else 0.5 / d
        bc[1] = ABSORBING
    for side, flag in zip(("left", "right"), bc):
        if flag == TRUNCATED:
            msg = f"{side} side truncated by the window: reflecting wall"
            notes.append(msg)
            warnings.warn(msg, TruncationWarning, stacklevel=2)
    return AtomicChain(tuple(states), tuple(masses), tuple(conds), tuple(kill), tuple(bc),
                       tuple(gap_edges), tuple(notes))


# ---------------------------------------------------------------------------
# energy form and generator


@dataclass(frozen=True)
class DirichletForm:
    chain: AtomicChain

    @property
    def edges(self) -> tuple:
        return tuple((i, i + 1, c) for i, c in enumerate(self.chain.conductances))

    @property
    def gap_coefficients(self) -> tuple:
        """Coefficient of ``(f(a) - f(b))**2`` on each gap edge."""
        c = self.chain.conductances
        return tuple(c[i] for i in self.chain.gap_edges)

    def matrix(self) -> sparse.csr_matrix:
        ch = self.chain
        n = ch.n
        mu = np.array([float(c) for c in ch.conductances])
        kv = np.array([float(k) for k in ch.kill_vector()])
        diag = kv.copy()
        diag[:-1] += mu
        diag[1:] += mu
        return sparse.diags([-mu, diag, -mu], [-1, 0, 1], shape=(n, n), format="csr")

    def dense(self) -> np.ndarray:
        return self.matrix().toarray()

    def energy(self, f) -> float:
        """``sum mu (f_{i+1}-f_i)^2`` plus killing terms; exact for rational ``f``."""
        ch = self.chain
        if ch.exact and all(is_exact(v) for v in f):
            e = sum((c * (f[i + 1] - f[i]) ** 2 for i, c in enumerate(ch.conductances)), Fraction(0))
            return e + ch.kill[0] * f[0] ** 2 + ch.kill[1] * f[-1] ** 2
        f = np.asarray(f, dtype=float)
        mu = np.array([float(c) for c in ch.conductances])
        e = float(np.sum(mu * np.diff(f) ** 2))
        return e + float(ch.kill[0]) * f[0] ** 2 + float(ch.kill[1]) * f[-1] ** 2


def assemble_form(chain: AtomicChain) -> DirichletForm:
    return DirichletForm(chain)


@dataclass(frozen=True)
class RateRow:
    state: object
    mu_left: Fraction
    mu_right: Fraction
    mu: Fraction
    holding_mean: Fraction
    p_left: Fraction
    p_right: Fraction
    p_kill: Fraction


def jump_rates(chain: AtomicChain) -> tuple:
    """Per-state holding means ``m_i/mu_i`` and jump probabilities, exact when possible."""
    rows = []
    kv = chain.kill_vector()
    for i in range(chain.n):
        ml, mr = chain.mu_left(i), chain.mu_right(i)
        mu = ml + mr + kv[i]
        if mu == 0:
            rows.append(RateRow(chain.states[i], ml, mr, mu, INF, Fraction(0), Fraction(0), Fraction(0)))
            continue
        rows.append(RateRow(chain.states[i], ml, mr, mu, chain.masses[i] / mu,
                            ml / mu, mr / mu, kv[i] / mu))
    return tuple(rows)


def generator(chain: AtomicChain, exact: bool = False):
    """Rate matrix ``Q = -M^{-1} A``; killing shows up as a row-sum deficit."""
    n = chain.n
    kv = chain.kill_vector()
    if exact:
        q = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            ml, mr = chain.mu_left(i), chain.mu_right(i)
            if i > 0:
                q[i][i - 1] = ml / chain.masses[i]
            if i < n - 1:
                q[i][i + 1] = mr / chain.masses[i]
            q[i][i] = -(ml + mr + kv[i]) / chain.masses[i]
        return q
    a = assemble_form(chain).dense()
    w = np.array([float(x) for x in chain.masses])
    return -a / w[:, None]


def _banded(chain: AtomicChain, alpha: float) -> np.ndarray:
    # (alpha M + A) in scipy's (1, 1) banded layout
    n = chain.n
    mu = np.array([float(c) for c in chain.conductances])
    kv = np.array([float(k) for k in chain.kill_vector()])
    w = np.array([float(x) for x in chain.masses])
    ab = np.zeros((3, n))
    ab[1] = alpha * w + kv
    ab[1, :-1] += mu
    ab[1, 1:] += mu
    ab[0, 1:] = -mu
    ab[2, :-1] = -mu
    return ab


def resolvent(chain: AtomicChain, alpha: float, f) -> np.ndarray:
    """``u = (alpha - Q)^{-1} f`` via the symmetric tridiagonal system
    ``(alpha M + A) u = M f``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    f = np.asarray(f, dtype=float)
    w = np.array([float(x) for x in chain.masses])
    rhs = w * f if f.ndim == 1 else w[:, None] * f
    return linalg.solve_banded((1, 1), _banded(chain, float(alpha)), rhs)


def resolvent_matrix(chain: AtomicChain, alpha: float) -> np.ndarray:
    if chain.n > MAX_DENSE:
        raise ValueError(f"dense resolvent limited to {MAX_DENSE} states")
    return resolvent(chain, alpha, np.eye(chain.n))


def semigroup(chain: AtomicChain, t: float, tail: float = 1e-14) -> np.ndarray:
    """``P_t = exp(tQ)`` by uniformization with scaling and squaring.

    Rate ``1.1 * max|q_ii|``; the Poisson series is cut once the remaining
    weight is below ``tail`` and that remainder is put on the last power, so
    conservative rows sum to one up to roundoff.
    """
    n = chain.n
    if n > MAX_DENSE:
        raise ValueError(f"dense semigroup limited to {MAX_DENSE} states")
    if t < 0:
        raise ValueError("t must be >= 0")
    q = generator(chain)
    lam = 1.1 * float(np.max(np.abs(np.diag(q)))) if n else 0.0
    if t == 0 or lam == 0:
        return np.eye(n)
    kernel = np.eye(n) + q / lam
    squarings = max(0, math.ceil(math.log2(lam * t / 8.0))) if lam * t > 8.0 else 0
    tau = t / 2 ** squarings
    mean = lam * tau
    kmax = int(stats.poisson.isf(tail, mean)) + 2
    weights = stats.poisson.pmf(np.arange(kmax + 1), mean)
    weights[-1] += max(0.0, 1.0 - weights.sum())
    out = weights[0] * np.eye(n)
    power = np.eye(n)
    for k in range(1, kmax + 1):
        power = power @ kernel
        out += weights[k] * power
    for _ in range(squarings):
        out = out @ out
    return out


def spectrum(chain: AtomicChain, k: Optional[int] = None) -> np.ndarray:
    """Lowest ``k`` eigenvalues of ``-Q`` in ``L^2(m)``.

    ``M^{-1/2} A M^{-1/2}`` is symmetric tridiagonal; eigenvalues come from
    Sturm-sequence bisection (LAPACK ``stebz``).
    """
    n = chain.n
    k = n if k is None else k
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= number of states")
    w = np.array([float(x) for x in chain.masses])
    mu = np.array([float(c) for c in chain.conductances])
    kv = np.array([float(x) for x in chain.kill_vector()])
    d = kv.copy()
    d[:-1] += mu
    d[1:] += mu
    d /= w
    if n == 1:
        vals = d[:1]
    else:
        e = -mu / np.sqrt(w[:-1] * w[1:])
        vals = linalg.eigvalsh_tridiagonal(d, e, select="i", select_range=(0, k - 1),
                                           lapack_driver="stebz")
    vals = np.maximum(np.sort(vals)[:k], 0.0)
    if chain.conservative:
        vals[0] = 0.0
    return vals


def absorption_probabilities(chain: AtomicChain):
    """P_i(absorbed eventually) from the first-step system ``A h = kill``."""
    a = assemble_form(chain).dense()
    kv = np.array([float(x) for x in chain.kill_vector()])
    h = linalg.solve(a, kv)
    return h, float(np.max(np.abs(a @ h - kv)))


def stationary_distribution(chain: AtomicChain) -> np.ndarray:
    w = np.array([float(x) for x in chain.masses])
    return w / w.sum()


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class CheckReport:
    name: str
    max_residual: float
    passed: bool
    details: dict = field(default_factory=dict)


def verify_markovian(form: DirichletForm, trials: int = 1000, seed: int = 0,
                     tol: float = 1e-12) -> CheckReport:
    """Unit contraction ``g = 0 v f ^ 1`` must not increase the energy."""
    rng = np.random.default_rng(seed)
    n = form.chain.n
    worst = 0.0
    violations = 0
    for _ in range(trials):
        f = rng.normal(0.5, 1.0, n) * rng.exponential(1.0)
        g = np.clip(f, 0.0, 1.0)
        ef, eg = form.energy(f), form.energy(g)
        excess = eg - ef
        # relative to the energy scale so large vectors do not trip roundoff
        rel = excess / max(1.0, abs(ef))
        worst = max(worst, rel)
        violations += rel > tol
    return CheckReport("markovian_contraction", float(worst), bool(violations == 0),
                       {"trials": trials, "violations": int(violations)})


def detailed_balance_residual(chain: AtomicChain) -> object:
    q = generator(chain, exact=chain.exact)
    worst = Fraction(0) if chain.exact else 0.0
    for i in range(chain.n - 1):
        r = chain.masses[i] * q[i][i + 1] - chain.masses[i + 1] * q[i + 1][i]
        worst = max(worst, abs(r))
    return worst


def resolvent_equation_residual(chain: AtomicChain, alpha: float, beta: float) -> float:
    ra, rb = resolvent_matrix(chain, alpha), resolvent_matrix(chain, beta)
    return float(np.max(np.abs(ra - rb - (beta - alpha) * ra @ rb)))


def trace_on_image(chain: AtomicChain, reg: RegularizedTriple):
    """Eliminate chain states outside ``s(I)`` (one-sided limit values).

    Such a state has no m-hat mass in the continuum; its Voronoi mass is moved
    to the neighbour inside its block and its conductances are put in series.
    Returns ``(trace chain, kept indices, moved-mass fraction)``.
    """
    keep = [i for i, v in enumerate(chain.states) if reg.is_image(v)]
    if len(keep) == chain.n:
        return chain, keep, 0.0
    if not keep:
        raise ValueError("no chain state lies in the image of the scale")
    gaps = set(chain.gap_edges)
    masses = [chain.masses[i] for i in keep]
    moved = 0
    pos = {i: k for k, i in enumerate(keep)}
    for i in range(chain.n):
        if i in pos:
            continue
        # neighbour within the same block (not across a gap edge), else nearest kept
        cands = []
        if i + 1 < chain.n and i not in gaps and (i + 1) in pos:
            cands.append(i + 1)
        if i - 1 >= 0 and (i - 1) not in gaps and (i - 1) in pos:
            cands.append(i - 1)
        if not cands:
            cands = [min(keep, key=lambda j: abs(j - i))]
        masses[pos[cands[0]]] += chain.masses[i]
        moved += chain.masses[i]
    resist = [0] * (len(keep) - 1)
    for k in range(len(keep) - 1):
        a, b = keep[k], keep[k + 1]
        resist[k] = sum(1 / chain.conductances[j] for j in range(a, b))
    kill = list(chain.kill)
    # killing conductances in series with any dropped end states
    if keep[0] > 0 and chain.kill[0] > 0:
        kill[0] = 1 / (1 / chain.kill[0] + sum(1 / chain.conductances[j] for j in range(keep[0])))
    if keep[-1] < chain.n - 1 and chain.kill[1] > 0:
        kill[1] = 1 / (1 / chain.kill[1] + sum(1 / chain.conductances[j] for j in range(keep[-1], chain.n - 1)))
    gap_edges = tuple(k for k in range(len(keep) - 1)
                      if any(j in gaps for j in range(keep[k], keep[k + 1])))
    tr = AtomicChain(tuple(chain.states[i] for i in keep), tuple(masses),
                     tuple(1 / r for r in resist), tuple(kill), chain.boundary, gap_edges,
                     chain.notes)
    return tr, keep, float(moved / chain.total_mass())


def verify_rk_restriction(reg: RegularizedTriple, n_per_block: int = 1, alphas=(1.0, 2.0),
                          window=None, times=((0.5, 0.7),), tol: float = 1e-9) -> CheckReport:
    """Pull the regularized resolvent back to source points and compare.

    ``R-dot_alpha(x, y) := R*_alpha(s(x), s(y))`` is looked up through
    ``s(r(v))`` for every chain state ``v`` in ``s(I)`` and compared with the
    restriction of ``R*_alpha``. Chapman-Kolmogorov is then checked for the
    pulled-back semigroup of the chain traced on ``s(I)``.
    """
    chain = atomize(reg, n_per_block, window)
    image_idx = [i for i, v in enumerate(chain.states) if reg.is_image(v)]
    src = [collapse_r(reg, chain.states[i]) for i in image_idx]
    back = [chain.index(source_to_hat(reg, x)) for x in src]
    worst_r = 0.0
    for a in alphas:
        r = resolvent_matrix(chain, a)
        pulled = r[np.ix_(back, back)]
        restricted = r[np.ix_(image_idx, image_idx)]
        worst_r = max(worst_r, float(np.max(np.abs(pulled - restricted))))
    tr, keep, moved = trace_on_image(chain, reg)
    tr_back = [tr.index(source_to_hat(reg, x)) for x in src]
    worst_ck = 0.0
    for t, s_ in times:
        p = lambda tt: semigroup(tr, tt)[np.ix_(tr_back, tr_back)]
        worst_ck = max(worst_ck, float(np.max(np.abs(p(t + s_) - p(t) @ p(s_)))))
    worst = max(worst_r, worst_ck)
    return CheckReport("ray_knight_restriction", worst, bool(worst < tol), {
        "resolvent_residual": worst_r,
        "chapman_kolmogorov_residual": worst_ck,
        "image_states": len(image_idx),
        "chain_states": chain.n,
        "non_image_mass_fraction": moved,
    })
