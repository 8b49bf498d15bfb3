"""Estimators that turn simulation output into checks of the model's asymptotics.

Tail indices (Hill and CCDF regression), conditional mean degrees (shell
sums and Monte Carlo), finite-volume percolation curves with threshold
crossings, distance-scaling tables and the ``g(u)`` envelope.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import graph as G
from .errors import BracketingError, DegenerateSampleError, DomainError
from .lattice import TORUS, LatticeBox, shell_counts
from .model import CONSTANT, laplace_complement, min_product_moment
from .parallel import map_trials
from .rng import TAG_PAIR, mix3, seed_u64, to_unit_open, trial_seed


# ---------------------------------------------------------------------------
# tail indices


@dataclass(frozen=True)
class TailEstimate:
    """Estimate of a CCDF exponent from the ``k`` largest of ``n`` samples."""

    exponent: float
    stderr: float
    k: int
    n: int

    def to_dict(self):
        return {"exponent": self.exponent, "stderr": self.stderr, "k": self.k, "n": self.n}


def default_hill_k(n):
    """``ceil(n ** 0.6)``, clipped to ``[2, n - 1]``."""
    return int(min(max(math.ceil(n**0.6), 2), n - 1))


def hill_estimator(samples, k=None):
    """Hill estimator of the tail exponent.

    Parameters
    ----------
    samples : array_like
        Observations; only the ``k + 1`` largest need to be positive.
    k : int, optional
        Number of upper order statistics (default :func:`default_hill_k`).

    Returns
    -------
    TailEstimate
        ``1 / mean(log(X_(i) / X_(k+1)))`` over the ``k`` largest values,
        with standard error ``exponent / sqrt(k)``.
    """
    x = np.sort(np.asarray(samples, dtype=float))[::-1]
    n = x.size
    if k is None:
        if n < 3:
            raise DegenerateSampleError(f"need at least 3 samples, got {n}")
        k = default_hill_k(n)
    k = int(k)
    if not 2 <= k < n:
        raise DegenerateSampleError(f"k must satisfy 2 <= k < n (k={k}, n={n})")
    threshold = x[k]
    if not threshold > 0:
        raise DegenerateSampleError("the (k+1)-th largest sample must be positive")
    mean_excess = float(np.mean(np.log(x[:k] / threshold)))
    if mean_excess <= 0:
        raise DegenerateSampleError("the top order statistics are all equal")
    exponent = 1.0 / mean_excess
    return TailEstimate(exponent, exponent / math.sqrt(k), k, n)


def ccdf_slope(samples, s_min):
    """Exponent from a least-squares fit of ``log P(X >= s)`` against ``log s``.

    The empirical CCDF is evaluated at every distinct sample value
    ``s >= s_min``; the negated slope is returned.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    values, first = np.unique(x, return_index=True)
    ccdf = (n - first) / n
    keep = (values >= s_min) & (values > 0)
    if np.count_nonzero(keep) < 10:
        raise DegenerateSampleError(f"fewer than 10 distinct sample values above s_min={s_min}")
    slope = np.polyfit(np.log(values[keep]), np.log(ccdf[keep]), 1)[0]
    return float(-slope)


# ---------------------------------------------------------------------------
# conditional degree


def conditional_degree_quadrature(params, w, R):
    """``sum_{0 < |y| <= R} (1 - E[exp(-lam w W / |y|^alpha)])``.

    This is the exact conditional mean of the degree of a site of weight
    ``w`` restricted to the ball of radius ``R``.  Shells are grouped, so
    the cost is one Laplace evaluation per distinct ``|y|^2``.  The sum is
    finite for every ``R`` even when ``alpha <= d``.
    """
    if w < 0 or R < 0:
        raise DomainError("w and R must be nonnegative")
    if params.lam * w == 0:
        return 0.0
    n, counts = shell_counts(params.d, R)
    if n.size == 0:
        return 0.0
    c = params.lam * w / n.astype(float) ** (params.alpha / 2.0)
    return float(np.sum(counts * laplace_complement(params.weights, c)))


def adaptive_radius(params, w, target=0.1, max_points=4_000_000, start=16.0):
    """Smallest doubling of ``start`` with ``truncation_bound <= target``.

    Stops early once the ball would hold more than ``max_points`` sites and
    returns ``(R, bound)`` for the last radius tried.
    """
    from .model import unit_ball_volume

    R = float(start)
    while True:
        bound = G.truncation_bound(params, w, R)
        grown = 2.0 * R
        if bound <= target or unit_ball_volume(params.d) * grown**params.d > max_points:
            return R, bound
        R = grown


def conditional_degree_empirical(params, w, R, trials, seed, threads=1, chunk=1000):
    """Monte Carlo mean and standard error of ``D_0^{(R)}`` with ``W_0 = w`` pinned.

    Trial ``t`` uses the seed ``mix(seed, t)``.
    """
    trials = int(trials)
    if trials < 1:
        raise DomainError("trials must be positive")
    chunks = [(lo, min(lo + chunk, trials)) for lo in range(0, trials, chunk)]

    def run(ci):
        lo, hi = chunks[ci]
        seeds = [trial_seed(seed, t) for t in range(lo, hi)]
        return G.origin_degree_samples(params, R, seeds, w0=w)[1]

    deg = np.concatenate(map_trials(run, range(len(chunks)), threads)).astype(float)
    stderr = float(deg.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.inf
    return float(deg.mean()), stderr


# ---------------------------------------------------------------------------
# percolation curves


@dataclass(frozen=True)
class CurveRow:
    side: int
    lam: float
    trials: int
    mean_fraction: float
    stderr: float


@dataclass(frozen=True)
class PercolationCurve:
    """Largest-component fractions on tori, aggregated per ``(side, lambda)``.

    ``raw`` holds one ``(trial, side, lambda, fraction)`` row per trial and
    grid point; within a trial the lambdas share all randomness.
    """

    rows: list
    raw: list = field(default_factory=list)

    def sides(self):
        return sorted({r.side for r in self.rows})

    def for_side(self, side):
        return sorted((r for r in self.rows if r.side == side), key=lambda r: r.lam)


def percolation_curve(params, sides, lambdas, trials, master_seed, threads=1, boundary=TORUS,
                      pair_budget=G.DEFAULT_PAIR_BUDGET):
    """Seed-coupled largest-component fractions.

    Trial ``t`` at the ``i``-th side uses the seed ``mix(master_seed, i * trials + t)``
    for every lambda, so each trial's fractions are nondecreasing in lambda.
    """
    sides = [int(s) for s in sides]
    lambdas = sorted(float(x) for x in lambdas)
    trials = int(trials)
    if trials < 1 or not sides or not lambdas:
        raise DomainError("need at least one side, one lambda and one trial")
    for side in sides:
        G.check_pair_budget(LatticeBox(params.d, side, boundary), pair_budget)
    jobs = [(i, side, t) for i, side in enumerate(sides) for t in range(trials)]

    def run(j):
        i, side, t = jobs[j]
        box = LatticeBox(params.d, side, boundary)
        graphs = G.generate_coupled(params, box, trial_seed(master_seed, i * trials + t), lambdas, pair_budget)
        return [G.largest_component_fraction(g) for g in graphs]

    results = map_trials(run, range(len(jobs)), threads)
    raw = []
    rows = []
    for i, side in enumerate(sides):
        block = np.array(results[i * trials:(i + 1) * trials])
        for t in range(trials):
            for lam, frac in zip(lambdas, block[t]):
                raw.append((t, side, lam, float(frac)))
        for j, lam in enumerate(lambdas):
            col = block[:, j]
            se = float(col.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
            rows.append(CurveRow(side, lam, trials, float(col.mean()), se))
    return PercolationCurve(rows, raw)


@dataclass(frozen=True)
class Crossing:
    side: int
    lam: float
    stderr: float


def crossing_lambda_estimate(curve, threshold):
    """Per-side lambda at which the mean fraction first reaches ``threshold``.

    Linear interpolation between the bracketing grid points.  The standard
    error propagates the two bracketing means' standard errors through the
    interpolation formula.  Returns ``(crossings, note)``; no infinite-volume
    limit is claimed.
    """
    if not 0 < threshold < 1:
        raise DomainError("threshold must lie in (0, 1)")
    sides = curve.sides()
    if len(sides) < 2:
        raise DegenerateSampleError("a crossing table needs at least two sides")
    out = []
    for side in sides:
        rows = curve.for_side(side)
        if len(rows) < 3:
            raise DegenerateSampleError(f"side {side} has fewer than three lambdas")
        found = None
        for lo, hi in zip(rows, rows[1:]):
            if lo.mean_fraction < threshold <= hi.mean_fraction:
                found = (lo, hi)
                break
        if found is None:
            raise BracketingError(f"threshold {threshold} is not bracketed for side {side}")
        lo, hi = found
        df = hi.mean_fraction - lo.mean_fraction
        t = (threshold - lo.mean_fraction) / df
        lam = lo.lam + t * (hi.lam - lo.lam)
        # d lam / d f_lo = (hi.lam - lo.lam)(t - 1) / df, d lam / d f_hi = -(hi.lam - lo.lam) t / df
        span = hi.lam - lo.lam
        se = abs(span / df) * math.hypot((1.0 - t) * lo.stderr, t * hi.stderr)
        out.append(Crossing(side, lam, se))
    trend = [c.lam for c in out]
    if all(a <= b for a, b in zip(trend, trend[1:])):
        shape = "nondecreasing"
    elif all(a >= b for a, b in zip(trend, trend[1:])):
        shape = "nonincreasing"
    else:
        shape = "not monotone"
    note = f"finite-size crossings are {shape} in the side length; no infinite-volume limit is inferred"
    return out, note


# ---------------------------------------------------------------------------
# distances


@dataclass(frozen=True)
class DistanceRow:
    norm: int
    pairs: int
    connected_fraction: float
    median_hops: float
    mean_hops: float


@dataclass(frozen=True)
class DistanceTable:
    """Per-norm statistics over connected pairs plus the raw pair records.

    ``raw`` rows are ``(norm, pair, x, y, hops)`` with ``hops`` ``None`` when
    no path of at most ``max_hops`` edges exists.
    """

    rows: list
    raw: list


def _pair_positions(box, norm, count, master_seed):
    # uniform start site; displacement of length `norm` along a random signed axis
    s = seed_u64(master_seed)
    out = []
    for p in range(count):
        h = np.uint64(mix3(s, TAG_PAIR, norm * 1_000_003 + p))
        x = min(int(to_unit_open(h) * box.point_count), box.point_count - 1)
        g = int(mix3(h, TAG_PAIR, 1))
        axis = g % box.d
        sign = 1 if (g >> 8) & 1 else -1
        pt = list(box.index_to_point(x))
        pt[axis] = (pt[axis] + sign * norm) % box.side
        out.append((x, box.point_to_index(pt)))
    return out


def distance_scaling(params, box, pair_norms, pairs_per_norm, max_hops, master_seed, threads=1,
                     realisations=1, block_bits=None, frontier_guard=G.DEFAULT_FRONTIER_GUARD):
    """Lazy bidirectional-BFS distances between sites at prescribed separations.

    Pairs are spread round-robin over ``realisations`` independent graphs;
    graph ``r`` uses the seed ``mix(master_seed, r)``.  Statistics use
    connected pairs only and ``connected_fraction`` reports how many those are.
    """
    norms = [int(n) for n in pair_norms]
    if box.boundary != TORUS:
        raise DomainError("distance scaling runs on a torus")
    if min(norms) < 1:
        raise DomainError("pair norms must be positive integers")
    if box.side < 4 * max(norms):
        raise DomainError(f"torus side {box.side} is below 4 x the largest norm {max(norms)}")
    pairs = [(n, p, *xy) for n in norms for p, xy in enumerate(_pair_positions(box, n, pairs_per_norm, master_seed))]

    def run(r):
        lazy = G.LazyGraph(params, box, trial_seed(master_seed, r), block_bits=block_bits)
        mine = [q for k, q in enumerate(pairs) if k % realisations == r]
        return [(q, lazy.pair_distance(q[2], q[3], max_hops, frontier_guard)) for q in mine]

    found = {}
    for chunk in map_trials(run, range(realisations), threads):
        for q, hops in chunk:
            found[q] = hops
    raw = [(q[0], q[1], q[2], q[3], found[q]) for q in pairs]
    rows = []
    for n in norms:
        hops = [r[4] for r in raw if r[0] == n]
        ok = np.array([h for h in hops if h is not None], dtype=float)
        frac = ok.size / len(hops)
        med = float(np.median(ok)) if ok.size else math.nan
        mean = float(ok.mean()) if ok.size else math.nan
        rows.append(DistanceRow(n, len(hops), frac, med, mean))
    return DistanceTable(rows, raw)


@dataclass(frozen=True)
class Regression:
    slope: float
    intercept: float
    residual: float

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "residual": self.residual}


def _fit(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    res = y - (slope * x + intercept)
    rms = float(math.sqrt(np.mean(res * res)))
    # a perfect fit leaves only rounding noise; report it as exactly zero
    if rms <= 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        rms = 0.0
    return Regression(float(slope), float(intercept), rms)


def distance_regressions(table):
    """Fits of median hops against ``log log |x|`` and ``log |x|``.

    Returns ``{"loglog": Regression, "log": Regression}`` with RMS residuals;
    norms without connected pairs are skipped.  Needs ``|x| >= 3`` so that
    ``log log |x| > 0`` and at least two usable norms.
    """
    pts = [(r.norm, r.median_hops) for r in table.rows if not math.isnan(r.median_hops) and r.norm >= 3]
    if len(pts) < 2:
        raise DegenerateSampleError("need medians at two or more norms >= 3")
    n = np.array([p[0] for p in pts], dtype=float)
    y = [p[1] for p in pts]
    return {"loglog": _fit(np.log(np.log(n)), y), "log": _fit(np.log(n), y)}


# ---------------------------------------------------------------------------
# g(u) envelope


@dataclass(frozen=True)
class EnvelopeRow:
    u: float
    g: float
    ratio: float


def envelope_exponent(dist):
    """``min(tau - 1, 2)``; bounded weights behave like ``tau = inf``."""
    return 2.0 if dist.kind == CONSTANT else min(dist.tau - 1.0, 2.0)


def gfun_envelope_check(dist, u_grid):
    """``g(u) = E[min(W1 W2 / u, 1)^2]`` against ``(1 + log u) u^-min(tau-1, 2)``.

    Returns ``(rows, max_ratio)`` with ``ratio = g(u) u^e / (1 + log u)``.
    """
    u = [float(x) for x in u_grid]
    if not u or min(u) <= 0 or any(a >= b for a, b in zip(u, u[1:])):
        raise DomainError("u_grid must be positive and strictly increasing")
    if min(u) < math.exp(-1.0):
        raise DomainError("the envelope needs 1 + log u > 0")
    e = envelope_exponent(dist)
    rows = []
    for x in u:
        g = min_product_moment(dist, x, power=2)
        rows.append(EnvelopeRow(x, g, g * x**e / (1.0 + math.log(x))))
    return rows, max(r.ratio for r in rows)
