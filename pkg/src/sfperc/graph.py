"""Weight fields, graph realisations and graph algorithms.

A realisation is a pure function of ``(params, box, seed)``.  Weights use the
per-site uniforms ``u_i = H(seed, "w", i)``; edges use the per-pair uniforms of
:mod:`sfperc.pairtree`, keyed by a separate sub-seed.  Full generation, lazy
single-vertex revelation and the lazy pair distance all read the same
uniforms, so they agree exactly, and raising ``lambda`` with the seed fixed
only ever adds edges.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
import math

import numpy as np
from numba import njit
from scipy import integrate

from . import pairtree
from .errors import DivergenceError, DomainError, ResourceError
from .lattice import TORUS, LatticeBox, ball_offsets, shell_counts
from .model import CONSTANT, edge_probability_r2, gamma_function, laplace_complement, unit_ball_volume, weight_moment
from .rng import TAG_EDGE, TAG_ORIGIN, TAG_WEIGHT, mix2, mix3, seed_u64, to_unit_open, uniforms_keyed

DEFAULT_PAIR_BUDGET = 10**9
DEFAULT_FRONTIER_GUARD = 5_000_000


def edge_seed(seed):
    """Sub-seed of the pair uniforms (kept apart from the weight stream)."""
    return np.uint64(mix2(seed_u64(seed), np.uint64(TAG_EDGE)))


# ---------------------------------------------------------------------------
# weights


@dataclass(frozen=True, eq=False)
class WeightField:
    box: LatticeBox
    values: np.ndarray
    seed: int
    dist: object = None

    def __post_init__(self):
        self.values.setflags(write=False)


def _weights_from_uniforms(dist, u):
    if dist.kind == CONSTANT:
        return np.full(u.shape, dist.support_min)
    return dist.support_min * u ** (-1.0 / (dist.tau - 1.0))


def sample_weights(box, dist, seed):
    """I.i.d. weights by inverse transform of the keyed per-site uniforms."""
    u = uniforms_keyed(seed_u64(seed), np.uint64(TAG_WEIGHT), box.point_count)
    return WeightField(box, _weights_from_uniforms(dist, u), int(seed), dist)


# ---------------------------------------------------------------------------
# realisation context shared by the full and lazy paths


@lru_cache(maxsize=8)
def _layout(box):
    return pairtree.morton_layout(box)


class _Context:
    """Morton layout and weight pyramid for one weight field."""

    def __init__(self, params, box, weights, seed):
        self.params = params
        self.box = box
        self.K, self.morton_of, self.point_of = _layout(box)
        self.B = box.d * self.K
        self.weights_mc = np.zeros(1 << self.B)
        self.weights_mc[self.morton_of] = weights.values
        self.wpyr, self.woff = pairtree.weight_pyramid(weights.values, self.morton_of, self.B)
        self.eseed = edge_seed(seed)
        self.torus = box.boundary == TORUS

    def args(self, lam=None):
        p = self.params
        return (self.eseed, self.box.d, self.K, self.box.side, self.torus,
                float(p.lam if lam is None else lam), float(p.alpha))

    def tree_args(self):
        return (*self.args(), self.morton_of, self.point_of, self.weights_mc, self.wpyr, self.woff)


# ---------------------------------------------------------------------------
# graphs


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected realisation in compressed sparse row form.

    ``neighbors(v)`` is ``indices[indptr[v]:indptr[v + 1]]`` (ascending);
    ``edges`` holds each edge once as ``(i, j)`` with ``i < j``, sorted.
    """

    box: LatticeBox
    weights: WeightField
    params: object
    seed: int
    edges: np.ndarray
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)

    @property
    def edge_count(self):
        return int(self.edges.shape[0])

    @property
    def point_count(self):
        return self.box.point_count

    def neighbors(self, v):
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @property
    def adjacency(self):
        return [self.neighbors(v) for v in range(self.point_count)]


def _sorted_edges(ei, ej):
    order = np.lexsort((ej, ei))
    return np.stack([ei[order], ej[order]], axis=1) if ei.size else np.zeros((0, 2), dtype=np.int64)


def graph_from_edges(box, weights, params, seed, edges):
    """Build the CSR structure of an edge array (rows ``i < j``, sorted)."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    n = box.point_count
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    order = np.lexsort((dst, src))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return Graph(box, weights, params, int(seed), edges, indptr, dst[order])


def check_pair_budget(box, pair_budget):
    n = box.point_count
    pairs = n * (n - 1) // 2
    if pairs > pair_budget:
        raise ResourceError(
            f"{pairs} vertex pairs exceed the generation budget of {pair_budget}; "
            "use vertex_edges / pair_distance_lazy for boxes this large"
        )


def generate_graph(params, box, seed, pair_budget=DEFAULT_PAIR_BUDGET, weights=None):
    """Full realisation: every pair ``{i, j}`` is an edge iff ``U_ij < p_ij``."""
    check_pair_budget(box, pair_budget)
    if weights is None:
        weights = sample_weights(box, params.weights, seed)
    ctx = _Context(params, box, weights, seed)
    ei, ej = pairtree.all_edges(*ctx.args(), ctx.point_of, ctx.weights_mc, ctx.wpyr, ctx.woff)
    return graph_from_edges(box, weights, params, seed, _sorted_edges(ei, ej))


def generate_coupled(params, box, seed, lambdas, pair_budget=DEFAULT_PAIR_BUDGET):
    """Realisations at several ``lambda`` sharing weights and pair uniforms.

    Returns one graph per entry of ``lambdas``; the edge sets are nested.
    """
    check_pair_budget(box, pair_budget)
    lambdas = [float(x) for x in lambdas]
    weights = sample_weights(box, params.weights, seed)
    if not lambdas:
        return []
    ctx = _Context(params, box, weights, seed)
    top = max(lambdas)
    ei, ej = pairtree.all_edges(*ctx.args(top), ctx.point_of, ctx.weights_mc, ctx.wpyr, ctx.woff)
    edges = _sorted_edges(ei, ej)
    u = _pair_uniforms_rowmajor(ctx, edges)
    r2 = box.squared_norms(box.coordinates(edges[:, 0]), box.coordinates(edges[:, 1])) if edges.size else np.zeros(0)
    w = weights.values
    out = []
    for lam in lambdas:
        p = _edge_probability_vec(lam, params.alpha, w[edges[:, 0]], w[edges[:, 1]], r2.astype(np.int64))
        keep = u < p
        out.append(graph_from_edges(box, weights, params.with_lambda(lam), seed, edges[keep]))
    return out


@njit(cache=True)
def _edge_probability_vec(lam, alpha, wi, wj, r2):
    out = np.empty(wi.size)
    for k in range(wi.size):
        out[k] = edge_probability_r2(lam, alpha, wi[k], wj[k], r2[k])
    return out


@njit(cache=True)
def _pair_uniform_batch(seed, B, ci, cj):
    out = np.empty(ci.size)
    for k in range(ci.size):
        out[k] = pairtree.pair_uniform_codes(seed, B, ci[k], cj[k])
    return out


def _pair_uniforms_rowmajor(ctx, edges):
    if edges.shape[0] == 0:
        return np.zeros(0)
    return _pair_uniform_batch(ctx.eseed, ctx.B, ctx.morton_of[edges[:, 0]], ctx.morton_of[edges[:, 1]])


class PairUniformSource:
    """The per-pair uniforms ``U_ij`` of a box under a seed.

    ``U_ij`` depends only on ``(seed, {i, j})``: it is read off a min-tree over
    the Morton-ordered pairs whose node variables are keyed hashes, so the
    family is exactly i.i.d. uniform on (0, 1) with no collisions between
    pairs.  Evaluating one pair costs ``O(d log L)`` hash evaluations.
    """

    def __init__(self, box, seed):
        self.box = box
        self.seed = int(seed)
        self._K, self._morton_of, _ = _layout(box)
        self._eseed = edge_seed(seed)

    def __call__(self, i, j):
        if i == j:
            raise DomainError("pair uniforms are defined for distinct sites only")
        n = self.box.point_count
        if not (0 <= i < n and 0 <= j < n):
            raise DomainError("site index out of range")
        return float(pairtree.pair_uniform_codes(self._eseed, self.box.d * self._K,
                                                 self._morton_of[i], self._morton_of[j]))

    def many(self, i, j):
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        return _pair_uniform_batch(self._eseed, self.box.d * self._K, self._morton_of[i], self._morton_of[j])


def generate_graph_bruteforce(params, box, seed):
    """Reference generator evaluating every pair from :class:`PairUniformSource`. Quadratic cost."""
    weights = sample_weights(box, params.weights, seed)
    K, morton_of, _ = _layout(box)
    ei, ej = pairtree.all_pairs_bruteforce(edge_seed(seed), box.d, K, box.side, box.boundary == TORUS,
                                           float(params.lam), float(params.alpha), morton_of,
                                           weights.values, box.coordinates())
    return graph_from_edges(box, weights, params, seed, _sorted_edges(ei, ej))


def default_block_bits(params, box):
    """Morton level of the blocks revealed at once by :class:`LazyGraph`.

    With ``gamma > 2`` degrees have finite variance, searches sweep large
    lattice-like balls and revealing ~1024 sites at a time amortises the tree
    walk.  With heavier degree tails a BFS touches few sites but far-flung
    hubs, so single sites are revealed.
    """
    dist = params.weights
    gamma = math.inf if dist.kind == CONSTANT else params.alpha * (dist.tau - 1.0) / params.d
    if gamma <= 2.0:
        return 0
    K = _layout(box)[0]
    return min(10, box.d * K)


class LazyGraph:
    """Lazily revealed realisation on a box too large to materialise.

    Holds the weight field and its block-maximum pyramid.  Adjacency is
    revealed one Morton block of ``2**block_bits`` codes at a time, cached,
    and coincides with that of :func:`generate_graph`.  The cache is dropped
    between queries once it holds more than ``cache_limit`` entries.
    """

    def __init__(self, params, box, seed, weights=None, block_bits=None, cache_limit=1 << 26):
        if weights is None:
            weights = sample_weights(box, params.weights, seed)
        self.params = params
        self.box = box
        self.seed = int(seed)
        self.weights = weights
        self._ctx = _Context(params, box, weights, seed)
        self.block_bits = default_block_bits(params, box) if block_bits is None else int(block_bits)
        if not 0 <= self.block_bits <= self._ctx.B:
            raise DomainError(f"block_bits must lie in [0, {self._ctx.B}]")
        self.cache_limit = int(cache_limit)
        n = box.point_count
        self._start = np.full(n, -1, dtype=np.int64)
        self._count = np.zeros(n, dtype=np.int64)
        self._pool = np.empty(1024, dtype=np.int64)
        self._fill = 0
        self._marks = None
        self._stamp = 0

    def _trim_cache(self):
        if self._fill > self.cache_limit:
            self._start[:] = -1
            self._pool = np.empty(1024, dtype=np.int64)
            self._fill = 0

    def vertex_edges(self, v):
        """Sorted neighbours of ``v``."""
        if not 0 <= v < self.box.point_count:
            raise DomainError(f"vertex {v} outside the box")
        self._trim_cache()
        if self._start[v] < 0:
            c = self._ctx
            q = int(c.morton_of[v]) >> self.block_bits
            self._pool, self._fill = pairtree.reveal_block(*c.tree_args(), q, self.block_bits, self._start,
                                                           self._count, self._pool, self._fill)
        s = self._start[v]
        return np.sort(self._pool[s:s + self._count[v]])

    def pair_distance(self, x, y, max_hops, frontier_guard=DEFAULT_FRONTIER_GUARD):
        """Hop count between ``x`` and ``y`` if at most ``max_hops``, else ``None``."""
        if max_hops < 0:
            raise DomainError("max_hops must be nonnegative")
        n = self.box.point_count
        if not (0 <= x < n and 0 <= y < n):
            raise DomainError("site index out of range")
        if self._marks is None:
            self._marks = (np.zeros(n, dtype=np.int32), np.zeros(n, dtype=np.int32))
        self._stamp += 1
        if self._stamp == np.iinfo(np.int32).max:
            self._marks[0][:] = 0
            self._marks[1][:] = 0
            self._stamp = 1
        self._trim_cache()
        status, value, self._pool, self._fill = pairtree.bidirectional_distance(
            *self._ctx.tree_args(), self.block_bits, self._start, self._count, self._pool, self._fill,
            int(x), int(y), int(max_hops), int(frontier_guard), self._marks[0], self._marks[1], self._stamp)
        if status == 2:
            raise ResourceError(f"BFS frontier of {value} vertices exceeds the guard of {frontier_guard}")
        return int(value) if status == 0 else None

    def reach_profile(self, source, n_max, frontier_guard=DEFAULT_FRONTIER_GUARD):
        """``[S_0, ..., S_n_max]``: farthest Euclidean distance reachable in at most ``n`` hops."""
        if n_max < 0:
            raise DomainError("n_max must be nonnegative")
        box = self.box
        origin = box.coordinates([source])[0]
        seen = {int(source)}
        frontier = [int(source)]
        best = 0
        out = [0.0]
        for _ in range(n_max):
            nxt = []
            for v in frontier:
                for z in self.vertex_edges(v).tolist():
                    if z not in seen:
                        seen.add(z)
                        nxt.append(z)
            if len(nxt) > frontier_guard:
                raise ResourceError(f"BFS frontier of {len(nxt)} vertices exceeds the guard of {frontier_guard}")
            if nxt:
                best = max(best, int(box.squared_norms(origin, box.coordinates(nxt)).max()))
            out.append(math.sqrt(best))
            frontier = nxt
        return out


def vertex_edges(params, box, weights, seed, v):
    """Sorted neighbours of ``v``, identical to ``generate_graph(...).neighbors(v)``."""
    return LazyGraph(params, box, seed, weights).vertex_edges(v)


def pair_distance_lazy(params, box, seed, x, y, max_hops, frontier_guard=DEFAULT_FRONTIER_GUARD):
    """Bidirectional BFS distance revealing edges on demand; ``None`` beyond ``max_hops``."""
    return LazyGraph(params, box, seed).pair_distance(x, y, max_hops, frontier_guard)


# ---------------------------------------------------------------------------
# clusters and distances


@njit(cache=True)
def _union_find(n, ei, ej):
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    for k in range(ei.size):
        a = ei[k]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = ej[k]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
    for v in range(n):
        r = v
        while parent[r] != r:
            r = parent[r]
        parent[v] = r
    return parent


def connected_components(graph):
    """Union-find labels (smallest vertex of each component) and sizes.

    Returns ``(labels, sizes)`` where ``sizes`` is sorted in decreasing order.
    """
    n = graph.point_count
    root = _union_find(n, graph.edges[:, 0].copy(), graph.edges[:, 1].copy())
    # relabel each component by its smallest member for a canonical labelling
    first = np.full(n, n, dtype=np.int64)
    np.minimum.at(first, root, np.arange(n))
    labels = first[root]
    sizes = np.sort(np.bincount(labels)[np.unique(labels)])[::-1]
    return labels, sizes


def largest_component_fraction(graph):
    _, sizes = connected_components(graph)
    return float(sizes[0]) / graph.point_count


@njit(cache=True)
def _bfs(indptr, indices, source, limit):
    n = indptr.size - 1
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    dist[source] = 0
    queue[0] = source
    head, tail = 0, 1
    while head < tail:
        v = queue[head]
        head += 1
        if dist[v] >= limit:
            continue
        for k in range(indptr[v], indptr[v + 1]):
            z = indices[k]
            if dist[z] < 0:
                dist[z] = dist[v] + 1
                queue[tail] = z
                tail += 1
    return dist


def bfs_distances(graph, source):
    """Hop counts from ``source``; unreachable vertices get ``inf``."""
    if not 0 <= source < graph.point_count:
        raise DomainError("source outside the box")
    raw = _bfs(graph.indptr, graph.indices, int(source), np.iinfo(np.int64).max)
    out = raw.astype(float)
    out[raw < 0] = math.inf
    return out


def reach_radius(graph, source, n):
    """Largest Euclidean distance from ``source`` to a vertex within ``n`` hops."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    if n == 0:
        return 0.0
    raw = _bfs(graph.indptr, graph.indices, int(source), int(n))
    reached = np.nonzero((raw >= 0) & (raw <= n))[0]
    box = graph.box
    r2 = box.squared_norms(box.coordinates([source])[0], box.coordinates(reached))
    return float(math.sqrt(int(r2.max())))


# ---------------------------------------------------------------------------
# origin degree on Z^d


@lru_cache(maxsize=16)
def _offsets(d, R):
    offs, n2 = ball_offsets(d, R)
    offs.setflags(write=False)
    n2.setflags(write=False)
    return offs, n2


@njit(cache=True, nogil=True)
def _origin_degrees(seeds, w0_pinned, lam, alpha, pareto, a, tau, n2, cuts, out_w0, out_deg):
    # out_deg[t, j] counts edges to the first cuts[j] ball sites (cuts ascending)
    inv = -1.0 / (tau - 1.0) if pareto else 0.0
    for t in range(seeds.size):
        s = seeds[t]
        if w0_pinned > 0.0:
            w0 = w0_pinned
        elif pareto:
            w0 = a * to_unit_open(mix3(s, TAG_WEIGHT, 0)) ** inv
        else:
            w0 = a
        deg = 0
        j = 0
        for k in range(cuts[-1]):
            while k == cuts[j]:
                out_deg[t, j] = deg
                j += 1
            if pareto:
                w = a * to_unit_open(mix3(s, TAG_WEIGHT, k + 1)) ** inv
            else:
                w = a
            p = edge_probability_r2(lam, alpha, w0, w, n2[k])
            if to_unit_open(mix3(s, TAG_ORIGIN, k)) < p:
                deg += 1
        while j < cuts.size:
            out_deg[t, j] = deg
            j += 1
        out_w0[t] = w0


def origin_degree_profile(params, radii, seeds, w0=None):
    """Truncated origin degrees at several radii from one coupled sample per seed.

    The balls are nested and share their sites' randomness, so the degree is
    nondecreasing along ``radii``.  Returns ``(w0, degrees)`` with ``degrees``
    of shape ``(len(seeds), len(radii))``.
    """
    radii = [float(r) for r in radii]
    if not radii or min(radii) < 0:
        raise DomainError("radii must be nonnegative")
    _, n2 = _offsets(params.d, max(radii))
    cuts = np.array([np.searchsorted(n2, math.floor(Fraction(r) ** 2), side="right") for r in radii],
                    dtype=np.int64)
    if np.any(np.diff(cuts) < 0):
        raise DomainError("radii must be nondecreasing")
    seeds = np.array([int(seed_u64(s)) for s in seeds], dtype=np.uint64)
    out_w0 = np.empty(seeds.size)
    out_deg = np.empty((seeds.size, cuts.size), dtype=np.int64)
    if w0 is not None and not w0 > 0:
        raise DomainError("pinned origin weight must be positive")
    dist = params.weights
    pareto = dist.kind != CONSTANT
    _origin_degrees(seeds, -1.0 if w0 is None else float(w0), float(params.lam), float(params.alpha),
                    pareto, float(dist.support_min), float(dist.tau) if pareto else 2.0,
                    n2, cuts, out_w0, out_deg)
    return out_w0, out_deg


def origin_degree_samples(params, R, seeds, w0=None):
    """Vectorised :func:`origin_degree_sample`; returns ``(w0, degree)`` arrays."""
    w, deg = origin_degree_profile(params, [R], seeds, w0)
    return w, deg[:, 0]


def origin_degree_sample(params, R, seed, w0=None):
    """``(W_0, D_0^{(R)})``: origin weight and its degree within the ball of radius ``R``.

    Site ``k`` of the ball (in :func:`~sfperc.lattice.ball_offsets` order)
    gets the weight uniform ``H(seed, "w", k + 1)`` and the edge uniform
    ``H(seed, "o", k)``; the origin uses ``H(seed, "w", 0)``.  ``w0`` pins
    the origin weight instead.
    """
    w, deg = origin_degree_profile(params, [R], [seed], w0)
    return float(w[0]), int(deg[0, 0])


def truncation_bound(params, w, R, exact_shells=4096):
    """Upper bound on ``E[D_0 - D_0^{(R)} | W_0 = w]``.

    Shells ``R^2 < |x|^2 <= R^2 + exact_shells`` are summed exactly with
    ``f(|x|) = 1 - E[exp(-lam w W / |x|^alpha)]``.  Beyond the last exact
    radius ``r0`` the sum is written as a Stieltjes integral against the
    lattice-point count ``N(r)``; integrating by parts with the decreasing
    ``f`` and ``N(r) <= v_d (r + h)^d`` (``h = sqrt(d)/2``) gives

        f(r0) (v_d (r0 + h)^d - N(r0)) + int_{r0}^inf f(r) d v_d (r + h)^(d-1) dr,

    where the integral is evaluated by adaptive quadrature of the exact ``f``.
    """
    d, alpha, lam = params.d, params.alpha, params.lam
    if alpha <= d:
        raise DivergenceError(f"the degree is infinite for alpha={alpha} <= d={d}")
    dist = params.weights
    if dist.kind != CONSTANT and alpha * (dist.tau - 1.0) <= d:
        raise DivergenceError("the degree is infinite for gamma <= 1")
    if w < 0 or R < 0:
        raise DomainError("w and R must be nonnegative")
    if lam * w == 0:
        return 0.0
    r2_lo = math.floor(Fraction(R) ** 2)
    r2_hi = r2_lo + int(exact_shells)
    n, counts = shell_counts(d, math.sqrt(r2_hi))
    inside = 1 + int(counts.sum())
    sel = n > r2_lo
    exact = float(np.sum(counts[sel] * laplace_complement(dist, lam * w / n[sel].astype(float) ** (alpha / 2))))
    r0 = math.sqrt(r2_hi)
    h = math.sqrt(d) / 2.0
    vd = unit_ball_volume(d)

    def f(log_r):
        c = lam * w * math.exp(-alpha * log_r)
        return float(laplace_complement(dist, c)[0]) if c > 0.0 else 0.0

    boundary = f(math.log(r0)) * max(vd * (r0 + h) ** d - inside, 0.0)

    # r = r0 e^t keeps slowly decaying integrands on a finite-looking scale
    def integrand(t):
        log_r = math.log(r0) + t
        fr = f(log_r)
        if fr == 0.0:
            return 0.0
        return fr * d * vd * math.exp(d * log_r) * (1.0 + h * math.exp(-log_r)) ** (d - 1)

    tail, err = integrate.quad(integrand, 0.0, math.inf, epsabs=0.0, epsrel=1e-10, limit=400)
    return exact + boundary + (tail + err) * (1.0 + 1e-9)
