"""Exact sample paths of atomized chains and their images in source coordinates."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .form_assembly import AtomicChain, CheckReport, jump_rates, semigroup, stationary_distribution
from .regularize import RegularizedTriple, StarSpace, collapse_r

CEMETERY = -1
MAX_EVENTS = 10_000_000
_BATCH = 4096


def path_rng(seed: int, path_index: int = 0) -> np.random.Generator:
    """Independent PCG64 stream per ``(seed, path_index)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(path_index)])))


@dataclass(frozen=True)
class Path:
    x0: int
    times: np.ndarray        # jump times, strictly increasing
    states: np.ndarray       # destination after each jump (CEMETERY when killed)
    horizon: float
    absorbed: bool = False
    absorption_time: Optional[float] = None
    truncated: bool = False  # event cap reached before the horizon

    @property
    def n_events(self) -> int:
        return len(self.times)

    @property
    def end_time(self) -> float:
        if self.absorbed:
            return self.absorption_time
        if self.truncated:
            return float(self.times[-1])
        return self.horizon

    def visits(self):
        """``(state, entry time, exit time)`` for every sojourn before the end."""
        seq = np.concatenate(([self.x0], self.states))
        starts = np.concatenate(([0.0], self.times))
        ends = np.concatenate((self.times, [self.end_time]))
        keep = seq != CEMETERY
        return seq[keep], starts[keep], ends[keep]

    def state_at(self, t: float) -> int:
        k = int(np.searchsorted(self.times, t, side="right"))
        return self.x0 if k == 0 else int(self.states[k - 1])


class _Tables:
    def __init__(self, chain: AtomicChain):
        rows = jump_rates(chain)
        self.rate = np.array([float(r.mu / w) if r.mu > 0 else 0.0
                              for r, w in zip(rows, chain.masses)])
        self.p_left = np.array([float(r.p_left) for r in rows])
        self.p_kill = np.array([float(r.p_kill) for r in rows])
        self.p_right = np.array([float(r.p_right) for r in rows])


def sample_path(chain: AtomicChain, x0: int, horizon: float, seed: int = 0,
                path_index: int = 0, max_events: int = MAX_EVENTS, _tables=None) -> Path:
    """Gillespie simulation: exponential holding with mean ``m_i/mu_i``, then a
    nearest-neighbour move (or killing) with probabilities ``mu_{i,j}/mu_i``."""
    if not 0 <= x0 < chain.n:
        raise ValueError("x0 must be a chain state index")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    tab = _tables or _Tables(chain)
    rng = path_rng(seed, path_index)
    # plain lists: scalar indexing of numpy arrays dominates the loop otherwise
    rate_t, left_t = tab.rate.tolist(), tab.p_left.tolist()
    move_t = (tab.p_left + tab.p_right).tolist()
    times, states = [], []
    t, i = 0.0, x0
    absorbed, t_abs, truncated = False, None, False
    expo = rng.standard_exponential(_BATCH).tolist()
    unif = rng.random(_BATCH).tolist()
    k = 0
    while True:
        rate = rate_t[i]
        if rate == 0.0:
            break
        if k == _BATCH:
            expo = rng.standard_exponential(_BATCH).tolist()
            unif = rng.random(_BATCH).tolist()
            k = 0
        t += expo[k] / rate
        u = unif[k]
        k += 1
        if t >= horizon:
            break
        if len(times) >= max_events:
            truncated = True
            break
        if u < left_t[i]:
            i -= 1
        elif u < move_t[i]:
            i += 1
        else:
            times.append(t)
            states.append(CEMETERY)
            absorbed, t_abs = True, t
            break
        times.append(t)
        states.append(i)
    return Path(x0, np.asarray(times, dtype=float), np.asarray(states, dtype=np.int64),
                float(horizon), absorbed, t_abs, truncated)


def sample_paths(chain: AtomicChain, x0: int, horizon: float, n_paths: int, seed: int = 0):
    tab = _Tables(chain)
    return [sample_path(chain, x0, horizon, seed, j, _tables=tab) for j in range(n_paths)]


# ---------------------------------------------------------------------------
# mapping to source coordinates


@dataclass(frozen=True)
class MappedPath:
    times: np.ndarray        # 0 followed by the jump times
    indices: np.ndarray      # chain state index (CEMETERY after killing)
    positions: tuple         # source abscissa (dot) or scale value (star); None at the cemetery
    labels: tuple            # real | left_limit | right_limit | darned | cemetery
    points: tuple = ()       # StarPoint per entry (star mode)


def _label(reg: RegularizedTriple, v) -> str:
    p = reg.point(v)
    return p.kind if p is not None else "real"


def map_path(path: Path, chain: AtomicChain, reg: RegularizedTriple, mode: str = "dot",
             star: Optional[StarSpace] = None) -> MappedPath:
    """Relabel a chain path: ``mode='dot'`` applies the collapse map ``r``,
    ``mode='star'`` applies ``r*`` and keeps scale values as positions."""
    if mode not in ("dot", "star"):
        raise ValueError("mode must be 'dot' or 'star'")
    if mode == "star" and star is None:
        raise ValueError("star mode needs the star space")
    if any(not reg.contains(v) for v in chain.states):
        raise ValueError("chain does not live on this regularized triple")
    idx = np.concatenate(([path.x0], path.states))
    times = np.concatenate(([0.0], path.times))
    cache = {}
    positions, labels, points = [], [], []
    for i in idx:
        i = int(i)
        if i == CEMETERY:
            positions.append(None)
            labels.append("cemetery")
            points.append(None)
            continue
        if i not in cache:
            v = chain.states[i]
            if mode == "dot":
                cache[i] = (collapse_r(reg, v), _label(reg, v), None)
            else:
                sp = star.r_star(v)
                cache[i] = (v, sp.label, sp)
        pos, lab, sp = cache[i]
        positions.append(pos)
        labels.append(lab)
        points.append(sp)
    return MappedPath(times, idx, tuple(positions), tuple(labels),
                      tuple(points) if mode == "star" else ())


def gap_crossing_continuity(path: Path, chain: AtomicChain, reg: RegularizedTriple) -> CheckReport:
    """Every move across a gap edge leaves the collapsed position unchanged.

    Only meaningful for strictly increasing scales; a plateau collapses to one
    source point and the collapsed path then jumps between plateau representatives.
    """
    if not reg.scale.is_strictly_increasing():
        raise ValueError("continuity of the collapsed path needs a strictly increasing scale")
    mp = map_path(path, chain, reg, "dot")
    gaps = set(chain.gap_edges)
    worst, crossings = 0.0, 0
    for k in range(1, len(mp.indices)):
        a, b = int(mp.indices[k - 1]), int(mp.indices[k])
        if b == CEMETERY:
            continue
        if min(a, b) in gaps and abs(a - b) == 1:
            crossings += 1
            worst = max(worst, abs(float(mp.positions[k] - mp.positions[k - 1])))
    return CheckReport("dot_path_continuity", worst, worst == 0.0, {"gap_crossings": crossings})


# ---------------------------------------------------------------------------
# statistics


def is_skip_free(path: Path) -> bool:
    seq = np.concatenate(([path.x0], path.states))
    alive = seq[1:] != CEMETERY
    return bool(np.all(np.abs(np.diff(seq)[alive]) == 1))


def occupation_times(path: Path, n: int) -> np.ndarray:
    s, a, b = path.visits()
    return np.bincount(s, weights=b - a, minlength=n)


@dataclass(frozen=True)
class PathEnsembleStats:
    occupation: np.ndarray
    holding_means: np.ndarray
    holding_counts: np.ndarray
    gap_crossings: int
    total_time: float


def ensemble_stats(chain: AtomicChain, paths) -> PathEnsembleStats:
    n = chain.n
    occ = np.zeros(n)
    hsum, hcnt = np.zeros(n), np.zeros(n, dtype=np.int64)
    gaps = np.zeros(n, dtype=bool)
    gaps[list(chain.gap_edges)] = True
    crossings = 0
    total = 0.0
    for p in paths:
        occ += occupation_times(p, n)
        s, a, b = p.visits()
        complete = _completed(p, b)
        np.add.at(hsum, s[complete], (b - a)[complete])
        np.add.at(hcnt, s[complete], 1)
        seq = np.concatenate(([p.x0], p.states))
        alive = seq[1:] != CEMETERY
        lo = np.minimum(seq[:-1], seq[1:])[alive]
        crossings += int(np.sum(gaps[lo]))
        total += p.end_time
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(hcnt > 0, hsum / np.maximum(hcnt, 1), np.nan)
    return PathEnsembleStats(occ, means, hcnt, crossings, total)


def _completed(p: Path, exits: np.ndarray) -> np.ndarray:
    # the last sojourn is censored unless it ended by killing
    if p.absorbed:
        return np.ones(len(exits), dtype=bool)
    return exits < p.end_time


def holding_samples(chain: AtomicChain, paths, state: int) -> np.ndarray:
    """Completed sojourn lengths at ``state`` (the censored final sojourn dropped)."""
    out = []
    for p in paths:
        s, a, b = p.visits()
        done = _completed(p, b)
        out.append((b - a)[(s == state) & done])
    return np.concatenate(out) if out else np.empty(0)


def holding_time_ks(chain: AtomicChain, paths, state: int, level: float = 0.01) -> CheckReport:
    """Kolmogorov-Smirnov test of sojourns at ``state`` against Exponential(m_i/mu_i)."""
    mean = float(jump_rates(chain)[state].holding_mean)
    x = holding_samples(chain, paths, state)
    if len(x) == 0:
        raise ValueError(f"no completed sojourns at state {state}")
    d = float(stats.kstest(x, "expon", args=(0, mean)).statistic)
    crit = float(stats.kstwo.ppf(1 - level, len(x)))
    return CheckReport("holding_time_ks", d, d < crit,
                       {"state": state, "samples": int(len(x)), "critical": crit,
                        "sample_mean": float(x.mean()), "mean": mean})


def occupation_check(chain: AtomicChain, x0: int, horizon: float, seed: int = 0,
                     tol: float = 0.05, max_events: int = MAX_EVENTS) -> CheckReport:
    """Time fractions of one long path against the mass-proportional law."""
    if not chain.conservative:
        raise ValueError("occupation check needs a conservative chain: with killing "
                         "the path is absorbed and has no stationary law")
    pi = stationary_distribution(chain)
    path = sample_path(chain, x0, horizon, seed, max_events=max_events)
    occ = occupation_times(path, chain.n)
    tv = 0.5 * float(np.abs(occ / occ.sum() - pi).sum())
    return CheckReport("occupation", tv, tv < tol,
                       {"events": path.n_events, "horizon": horizon, "truncated": path.truncated})


def empirical_distribution(chain: AtomicChain, x0: int, t: float, n_paths: int,
                           seed: int = 0) -> np.ndarray:
    """Empirical law of ``X_t``; the last entry is the cemetery."""
    tab = _Tables(chain)
    counts = np.zeros(chain.n + 1)
    for j in range(n_paths):
        p = sample_path(chain, x0, t, seed, j, _tables=tab)
        s = p.state_at(t) if not (p.absorbed and p.absorption_time <= t) else CEMETERY
        counts[s if s != CEMETERY else chain.n] += 1
    return counts / n_paths


def semigroup_consistency(chain: AtomicChain, x0: int, t: float = 1.0, n_paths: int = 10_000,
                          seed: int = 0, tol: float = 0.05) -> CheckReport:
    emp = empirical_distribution(chain, x0, t, n_paths, seed)
    row = semigroup(chain, t)[x0]
    exact = np.concatenate((row, [max(0.0, 1.0 - row.sum())]))
    tv = 0.5 * float(np.abs(emp - exact).sum())
    return CheckReport("empirical_semigroup", tv, tv < tol, {"paths": n_paths, "t": t})


# ---------------------------------------------------------------------------
# two-block structure


@dataclass(frozen=True)
class ExcursionReport:
    crossings: int
    segment_blocks: tuple      # block (0 or 1) of each inter-crossing segment
    segment_lengths: tuple
    single_signed: bool


def excursion_blocks(path: Path, chain: AtomicChain) -> ExcursionReport:
    """Split a two-block path at its gap crossings and audit each segment."""
    if len(chain.gap_edges) != 1:
        raise ValueError("excursion audit needs a chain with exactly one gap")
    g = chain.gap_edges[0]
    seq = np.concatenate(([path.x0], path.states))
    times = np.concatenate(([0.0], path.times, [path.end_time]))
    alive = seq != CEMETERY
    seq, tt = seq[alive], times[:-1][alive]
    block = (seq > g).astype(int)
    cross = [k for k in range(1, len(seq)) if {seq[k - 1], seq[k]} == {g, g + 1}]
    cuts = [0] + cross + [len(seq)]
    blocks, lengths, ok = [], [], True
    ends = np.concatenate((tt[1:], [path.end_time]))
    for a, b in zip(cuts, cuts[1:]):
        seg = block[a:b]
        ok &= bool(np.all(seg == seg[0]))
        blocks.append(int(seg[0]))
        lengths.append(float(ends[b - 1] - tt[a]))
    return ExcursionReport(len(cross), tuple(blocks), tuple(lengths), ok)


@dataclass(frozen=True)
class WitnessReport:
    position: object
    exit_left_given_left: float
    exit_left_given_right: float
    tv: float
    exact_tv: float
    entries: tuple             # (from left, from right)
    passed: bool


def _cluster_exit_left(chain: AtomicChain, cluster) -> np.ndarray:
    # P(leave the cluster to the left | start at each cluster state), by a linear solve
    lo, hi = cluster[0], cluster[-1]
    rows = jump_rates(chain)
    k = len(cluster)
    a = np.eye(k)
    b = np.zeros(k)
    for r, i in enumerate(cluster):
        pl, pr = float(rows[i].p_left), float(rows[i].p_right)
        if i - 1 >= lo:
            a[r, r - 1] -= pl
        else:
            b[r] += pl
        if i + 1 <= hi:
            a[r, r + 1] -= pr
    return np.linalg.solve(a, b)


def strong_markov_witness(chain: AtomicChain, reg: RegularizedTriple, position=0,
                          horizon: float = 2000.0, seed: int = 0, x0: Optional[int] = None,
                          threshold: float = 0.5) -> WitnessReport:
    """Side on which the collapsed path leaves ``position`` given the side it came from.

    The chain states over ``position`` form a cluster joined by gap edges.
    A strong Markov process would forget the arrival side; here the two
    conditional laws differ, and the TV between them is the witness.
    """
    cluster = [i for i, v in enumerate(chain.states) if reg.contains(v) and collapse_r(reg, v) == position]
    if len(cluster) < 2:
        raise ValueError("position does not split into several chain states")
    lo, hi = cluster[0], cluster[-1]
    if lo == 0 or hi == chain.n - 1:
        raise ValueError("cluster must be interior to the chain")
    exit_left = _cluster_exit_left(chain, cluster)
    exact_tv = abs(float(exit_left[0] - exit_left[-1]))
    start = lo - 1 if x0 is None else x0
    p = sample_path(chain, start, horizon, seed)
    seq = np.concatenate(([p.x0], p.states))
    seq = seq[seq != CEMETERY]
    tally = {"left": [0, 0], "right": [0, 0]}   # [exits left, entries]
    side = None
    for a, b in zip(seq[:-1], seq[1:]):
        inside_a, inside_b = lo <= a <= hi, lo <= b <= hi
        if not inside_a and inside_b:
            side = "left" if a < lo else "right"
        elif inside_a and not inside_b and side is not None:
            tally[side][1] += 1
            tally[side][0] += int(b < lo)
            side = None
    fl = tally["left"][0] / max(tally["left"][1], 1)
    fr = tally["right"][0] / max(tally["right"][1], 1)
    tv = abs(fl - fr)
    return WitnessReport(position, fl, fr, tv, exact_tv,
                         (tally["left"][1], tally["right"][1]), bool(tv > threshold))
