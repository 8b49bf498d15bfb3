"""Per-pair uniforms organised as a lazily expanded min-tree.

Every unordered pair of sites ``{i, j}`` owns a uniform ``U_ij`` and the edge
is present iff ``U_ij < p_ij``.  The uniforms are i.i.d. but they are not
drawn one by one.  Sites are renumbered along a Morton (Z-order) curve on the
padded ``2^K`` box, and the upper triangle of the pair matrix is split as a
quadtree.  Each tree node stores only the minimum of the uniforms below it:

* the root minimum of ``n`` uniforms is ``1 - (1 - V)^(1/n)``;
* the child holding the parent's minimum is chosen with probability
  proportional to its pair count and inherits that minimum;
* every other child's uniforms are i.i.d. on ``(m, 1)``, so its minimum is
  ``m + (1 - m) * Beta(1, n_child)``.

The leaf value of a pair is its ``U_ij``.  All node variables are counter-based
hashes of ``(seed, level, row block, column block)``, so ``U_ij`` is a pure
function of ``(seed, {i, j})`` whatever the traversal order.  A node whose
minimum already exceeds an upper bound on the edge probabilities of all its
pairs contains no edge and is skipped; this is what makes full generation cost
proportional to the number of edges and single-vertex revelation cheap on
large tori.
"""

import math

import numpy as np
from numba import njit

from .model import edge_probability_r2
from .rng import TAG_NODE, mix2, mix4, to_unit_open

# prune only when the node minimum clears the bound by a relative margin,
# so rounding in pow/expm1 can never drop a real edge
_BOUND_SLACK = 1e-9


def morton_layout(box):
    """Return ``(bits_per_axis, morton_of, point_of)`` for a box.

    ``morton_of[i]`` is the Morton code of row-major index ``i``;
    ``point_of[code]`` is the row-major index or ``-1`` for padding codes.
    """
    d, L = box.d, box.side
    K = max(0, int(math.ceil(math.log2(L)))) if L > 1 else 0
    coords = box.coordinates()
    codes = np.zeros(box.point_count, dtype=np.int64)
    for t in range(K):
        for a in range(d):
            codes |= ((coords[:, a] >> t) & 1) << (t * d + a)
    point_of = np.full(1 << (d * K), -1, dtype=np.int64)
    point_of[codes] = np.arange(box.point_count, dtype=np.int64)
    return K, codes, point_of


def weight_pyramid(weights_rowmajor, morton_of, total_bits):
    """Block maxima of the weights for every Morton level, stored flat."""
    M = 1 << total_bits
    base = np.zeros(M)
    base[morton_of] = weights_rowmajor
    offsets = np.zeros(total_bits + 2, dtype=np.int64)
    levels = [base]
    for b in range(1, total_bits + 1):
        prev = levels[-1]
        levels.append(np.maximum(prev[0::2], prev[1::2]))
    for b in range(total_bits + 1):
        offsets[b + 1] = offsets[b] + levels[b].size
    return np.concatenate(levels), offsets


@njit(cache=True, nogil=True)
def _beta1_min(u, n):
    # minimum of n i.i.d. uniforms from one uniform u
    return -math.expm1(math.log1p(-u) / n)


@njit(cache=True, nogil=True)
def _node_size(b, r, c):
    s = float(1 << b)
    if r == c:
        return 0.5 * s * (s - 1.0)
    return s * s


@njit(cache=True, nogil=True)
def _root_min(seed, B):
    n = _node_size(B, 0, 0)
    h = mix4(seed, TAG_NODE, B + 1, 0)
    return _beta1_min(to_unit_open(h), n)


@njit(cache=True, nogil=True)
def _node_hash(seed, b, r, c):
    return mix4(seed, TAG_NODE ^ b, r, c)


@njit(cache=True, nogil=True)
def _argmin_child(h, b, r, c):
    """Index of the child that holds the node minimum (chosen by pair count)."""
    u = to_unit_open(h)
    if r != c:
        return min(int(u * 4.0), 3)
    s = float(1 << (b - 1))
    n_diag = 0.5 * s * (s - 1.0)
    x = u * (2.0 * n_diag + s * s)
    if x < n_diag:
        return 0
    if x < n_diag + s * s:
        return 1
    return 2


@njit(cache=True, nogil=True)
def _child(h, arg, b, r, c, m, k):
    """State ``(cb, cr, cc, cm)`` of child ``k`` of node ``(b, r, c)`` with minimum ``m``.

    ``h`` is the node hash and ``arg`` its argmin child.  Off-diagonal nodes
    have children 0..3 = (2r+i, 2c+j) with k = 2i + j; diagonal nodes have
    children 0..2 = (2r, 2r), (2r, 2r+1), (2r+1, 2r+1).  ``cm`` is negative
    for an empty child.
    """
    cb = b - 1
    if r == c:
        if k == 0:
            cr, cc = 2 * r, 2 * r
        elif k == 1:
            cr, cc = 2 * r, 2 * r + 1
        else:
            cr, cc = 2 * r + 1, 2 * r + 1
    else:
        cr = 2 * r + (k >> 1)
        cc = 2 * c + (k & 1)
    n_child = _node_size(cb, cr, cc)
    if n_child == 0.0:
        return cb, cr, cc, -1.0
    if k == arg:
        return cb, cr, cc, m
    v = to_unit_open(mix2(h, k + 1))
    return cb, cr, cc, m + (1.0 - m) * _beta1_min(v, n_child)


@njit(cache=True, nogil=True)
def pair_uniform_codes(seed, B, ci, cj):
    """``U`` of the pair with Morton codes ``ci != cj`` (order irrelevant)."""
    if ci > cj:
        ci, cj = cj, ci
    m = _root_min(seed, B)
    b, r, c = B, 0, 0
    while b > 0:
        rr = ci >> (b - 1)
        cc = cj >> (b - 1)
        if r == c:
            if rr == cc:
                k = 0 if (rr & 1) == 0 else 2
            else:
                k = 1
        else:
            k = 2 * (rr & 1) + (cc & 1)
        h = _node_hash(seed, b, r, c)
        b, r, c, m = _child(h, _argmin_child(h, b, r, c), b, r, c, m, k)
    return m


@njit(cache=True, nogil=True)
def _decode(code, d, K, out):
    for a in range(d):
        out[a] = 0
    for t in range(K):
        for a in range(d):
            out[a] |= ((code >> (t * d + a)) & 1) << t


@njit(cache=True, nogil=True)
def _axis_bits(b, d, a):
    # number of free low bits of axis a in a Morton block of 2^b codes
    return (b - a + d - 1) // d if b > a else 0


@njit(cache=True, nogil=True)
def _gap2(d, K, L, torus, b1, blk1, b2, blk2, lo1, lo2):
    """Lower bound on the squared distance between two Morton blocks (clipped to the box)."""
    _decode(blk1 << b1, d, K, lo1)
    _decode(blk2 << b2, d, K, lo2)
    g2 = 0
    for a in range(d):
        a0 = lo1[a]
        a1 = min(a0 + (1 << _axis_bits(b1, d, a)) - 1, L - 1)
        c0 = lo2[a]
        c1 = min(c0 + (1 << _axis_bits(b2, d, a)) - 1, L - 1)
        if a0 <= c1 and c0 <= a1:
            continue
        if torus:
            g = min((c0 - a1) % L, (a0 - c1) % L)
        else:
            g = max(c0 - a1, a0 - c1)
        g2 += g * g
    return g2


@njit(cache=True, nogil=True)
def _point_r2(d, L, torus, p, q):
    r2 = 0
    for a in range(d):
        diff = abs(p[a] - q[a])
        if torus and diff > L - diff:
            diff = L - diff
        r2 += diff * diff
    return r2


@njit(cache=True, nogil=True)
def _bound(lam, alpha, wprod, g2):
    if wprod == 0.0:
        return 0.0
    if g2 < 1:
        g2 = 1
    p = edge_probability_r2(lam, alpha, 1.0, wprod, g2)
    return p * (1.0 + _BOUND_SLACK) + 1e-300


@njit(cache=True, nogil=True)
def _push(buf, n, value):
    if n == buf.size:
        new = np.empty(2 * buf.size, dtype=buf.dtype)
        new[:n] = buf[:n]
        buf = new
    buf[n] = value
    return buf


@njit(cache=True, nogil=True)
def all_edges(seed, d, K, L, torus, lam, alpha, point_of, weights_mc, wpyr, woff):
    """Every edge ``(i, j)`` (row-major, ``i < j``) of the realisation, unsorted."""
    B = d * K
    ei = np.empty(1024, dtype=np.int64)
    ej = np.empty(1024, dtype=np.int64)
    ne = 0
    if B == 0:
        return ei[:0], ej[:0]
    cap = 64 * (B + 1)
    sb = np.empty(cap, dtype=np.int64)
    sr = np.empty(cap, dtype=np.int64)
    sc = np.empty(cap, dtype=np.int64)
    sm = np.empty(cap)
    lo1 = np.empty(d, dtype=np.int64)
    lo2 = np.empty(d, dtype=np.int64)
    top = 0
    sb[0], sr[0], sc[0], sm[0] = B, 0, 0, _root_min(seed, B)
    top = 1
    while top > 0:
        top -= 1
        b, r, c, m = sb[top], sr[top], sc[top], sm[top]
        wr = wpyr[woff[b] + r]
        wc = wpyr[woff[b] + c]
        if wr == 0.0 or wc == 0.0:
            continue
        if b == 0:
            i = point_of[r]
            j = point_of[c]
            _decode(r, d, K, lo1)
            _decode(c, d, K, lo2)
            r2 = _point_r2(d, L, torus, lo1, lo2)
            if m < edge_probability_r2(lam, alpha, weights_mc[r], weights_mc[c], r2):
                if i > j:
                    i, j = j, i
                ei = _push(ei, ne, i)
                ej = _push(ej, ne, j)
                ne += 1
            continue
        g2 = 0 if r == c else _gap2(d, K, L, torus, b, r, b, c, lo1, lo2)
        if m >= _bound(lam, alpha, wr * wc, g2):
            continue
        nk = 3 if r == c else 4
        h = _node_hash(seed, b, r, c)
        arg = _argmin_child(h, b, r, c)
        for k in range(nk):
            cb, cr, cc, cm = _child(h, arg, b, r, c, m, k)
            if cm < 0.0:
                continue
            if top == sb.size:
                sb = _push(sb, top, cb)
                sr = _push(sr, top, cr)
                sc = _push(sc, top, cc)
                sm = _push(sm, top, cm)
            else:
                sb[top], sr[top], sc[top], sm[top] = cb, cr, cc, cm
            top += 1
    return ei[:ne], ej[:ne]


@njit(cache=True, nogil=True)
def block_edges(seed, d, K, L, torus, lam, alpha, point_of, weights_mc, wpyr, woff, q, b0):
    """Every edge with an endpoint in the Morton block ``q`` of level ``b0``.

    Above level ``b0`` only nodes whose row or column block contains the
    query block are visited, bounded by the query-to-block gap; below it the
    traversal is the same as for full generation.  ``b0 = 0`` reveals the
    neighbours of a single site.  Returns row-major ``(i, j)`` arrays.
    """
    B = d * K
    ei = np.empty(256, dtype=np.int64)
    ej = np.empty(256, dtype=np.int64)
    ne = 0
    wq = wpyr[woff[b0] + q]
    if B == 0 or wq == 0.0:
        return ei[:0], ej[:0]
    cap = 64 * (B + 1)
    sb = np.empty(cap, dtype=np.int64)
    sr = np.empty(cap, dtype=np.int64)
    sc = np.empty(cap, dtype=np.int64)
    sm = np.empty(cap)
    lo1 = np.empty(d, dtype=np.int64)
    lo2 = np.empty(d, dtype=np.int64)
    sb[0], sr[0], sc[0], sm[0] = B, 0, 0, _root_min(seed, B)
    top = 1
    while top > 0:
        top -= 1
        b, r, c, m = sb[top], sr[top], sc[top], sm[top]
        wr = wpyr[woff[b] + r]
        wc = wpyr[woff[b] + c]
        if wr == 0.0 or wc == 0.0:
            continue
        if b == 0:
            _decode(r, d, K, lo1)
            _decode(c, d, K, lo2)
            r2 = _point_r2(d, L, torus, lo1, lo2)
            if m < edge_probability_r2(lam, alpha, weights_mc[r], weights_mc[c], r2):
                i = point_of[r]
                j = point_of[c]
                if i > j:
                    i, j = j, i
                ei = _push(ei, ne, i)
                ej = _push(ej, ne, j)
                ne += 1
            continue
        if b > b0:
            qb = q >> (b - b0)
            other = c if r == qb else r
            if r == c:
                g2 = 0
            else:
                g2 = _gap2(d, K, L, torus, b0, q, b, other, lo1, lo2)
            if m >= _bound(lam, alpha, wq * wpyr[woff[b] + other], g2):
                continue
        else:
            g2 = 0 if r == c else _gap2(d, K, L, torus, b, r, b, c, lo1, lo2)
            if m >= _bound(lam, alpha, wr * wc, g2):
                continue
        h = _node_hash(seed, b, r, c)
        arg = _argmin_child(h, b, r, c)
        if b > b0:
            # only the two children whose row or column block holds the query block
            half = (q >> (b - 1 - b0)) & 1
            if r == c:
                k0, k1 = (0, 1) if half == 0 else (1, 2)
            elif r == qb:
                k0, k1 = 2 * half, 2 * half + 1
            else:
                k0, k1 = half, half + 2
            klist = (k0, k1, -1, -1)
        elif r == c:
            klist = (0, 1, 2, -1)
        else:
            klist = (0, 1, 2, 3)
        for k in klist:
            if k < 0:
                continue
            cb, cr, cc, cm = _child(h, arg, b, r, c, m, k)
            if cm < 0.0:
                continue
            if top == sb.size:
                sb = _push(sb, top, cb)
                sr = _push(sr, top, cr)
                sc = _push(sc, top, cc)
                sm = _push(sm, top, cm)
            else:
                sb[top], sr[top], sc[top], sm[top] = cb, cr, cc, cm
            top += 1
    return ei[:ne], ej[:ne]


@njit(cache=True, nogil=True)
def reveal_block(seed, d, K, L, torus, lam, alpha, morton_of, point_of, weights_mc, wpyr, woff,
                 q, b0, adj_start, adj_count, pool, pool_n):
    """Append the adjacency lists of every site in block ``q`` to the cache.

    ``adj_start[v]``/``adj_count[v]`` locate the neighbours of ``v`` in
    ``pool``; returns the (possibly grown) pool and its new fill.
    """
    ei, ej = block_edges(seed, d, K, L, torus, lam, alpha, point_of, weights_mc, wpyr, woff, q, b0)
    lo = q << b0
    hi = (q + 1) << b0
    for code in range(lo, hi):
        v = point_of[code]
        if v >= 0:
            adj_count[v] = 0
    for k in range(ei.size):
        if morton_of[ei[k]] >> b0 == q:
            adj_count[ei[k]] += 1
        if morton_of[ej[k]] >> b0 == q:
            adj_count[ej[k]] += 1
    need = pool_n + 2 * ei.size
    if need > pool.size:
        new = np.empty(max(need, 2 * pool.size), dtype=np.int64)
        new[:pool_n] = pool[:pool_n]
        pool = new
    for code in range(lo, hi):
        v = point_of[code]
        if v >= 0:
            adj_start[v] = pool_n
            pool_n += adj_count[v]
            adj_count[v] = 0
    for k in range(ei.size):
        i = ei[k]
        j = ej[k]
        if morton_of[i] >> b0 == q:
            pool[adj_start[i] + adj_count[i]] = j
            adj_count[i] += 1
        if morton_of[j] >> b0 == q:
            pool[adj_start[j] + adj_count[j]] = i
            adj_count[j] += 1
    return pool, pool_n


@njit(cache=True, nogil=True)
def all_pairs_bruteforce(seed, d, K, L, torus, lam, alpha, morton_of, weights, coords):
    """Reference edge list: evaluate ``U_ij < p_ij`` pointwise for every pair."""
    N = weights.size
    B = d * K
    ei = np.empty(1024, dtype=np.int64)
    ej = np.empty(1024, dtype=np.int64)
    ne = 0
    for i in range(N):
        for j in range(i + 1, N):
            r2 = _point_r2(d, L, torus, coords[i], coords[j])
            p = edge_probability_r2(lam, alpha, weights[i], weights[j], r2)
            if p > 0.0 and pair_uniform_codes(seed, B, morton_of[i], morton_of[j]) < p:
                ei = _push(ei, ne, i)
                ej = _push(ej, ne, j)
                ne += 1
    return ei[:ne], ej[:ne]


@njit(cache=True, nogil=True)
def bidirectional_distance(seed, d, K, L, torus, lam, alpha, morton_of, point_of, weights_mc, wpyr, woff,
                           b0, adj_start, adj_count, pool, pool_n,
                           x, y, max_hops, frontier_guard, mark_a, mark_b, stamp):
    """Hop distance between row-major sites ``x`` and ``y`` revealing edges lazily.

    Adjacency is revealed a Morton block of level ``b0`` at a time through
    :func:`reveal_block` and kept in the cache arrays.  Returns
    ``(status, value, pool, pool_n)``: status 0 = found (value = hops),
    1 = farther than ``max_hops`` or disconnected, 2 = frontier guard hit
    (value = offending frontier size).  ``mark_a``/``mark_b`` are int32
    scratch arrays compared against ``stamp``.
    """
    if x == y:
        return 0, 0, pool, pool_n
    fa = np.empty(16, dtype=np.int64)
    fb = np.empty(16, dtype=np.int64)
    fa[0] = x
    fb[0] = y
    na = 1
    nb = 1
    mark_a[x] = stamp
    mark_b[y] = stamp
    ka = 0
    kb = 0
    # invariant: no path of length <= ka + kb
    while ka + kb < max_hops:
        if na == 0 or nb == 0:
            return 1, -1, pool, pool_n
        expand_a = na <= nb
        if expand_a:
            front, nf, mine, theirs = fa, na, mark_a, mark_b
        else:
            front, nf, mine, theirs = fb, nb, mark_b, mark_a
        # heavy sites first: any hit ends the search with the same length
        order = np.argsort(-weights_mc[morton_of[front[:nf]]], kind="mergesort")
        new = np.empty(16, dtype=np.int64)
        nn = 0
        for t in range(nf):
            v = front[order[t]]
            if adj_start[v] < 0:
                pool, pool_n = reveal_block(seed, d, K, L, torus, lam, alpha, morton_of, point_of,
                                            weights_mc, wpyr, woff, morton_of[v] >> b0, b0,
                                            adj_start, adj_count, pool, pool_n)
            s0 = adj_start[v]
            for q in range(s0, s0 + adj_count[v]):
                z = pool[q]
                if theirs[z] == stamp:
                    return 0, ka + kb + 1, pool, pool_n
                if mine[z] != stamp:
                    mine[z] = stamp
                    new = _push(new, nn, z)
                    nn += 1
            if nn > frontier_guard:
                return 2, nn, pool, pool_n
        if expand_a:
            fa, na = new, nn
            ka += 1
        else:
            fb, nb = new, nn
            kb += 1
    return 1, -1, pool, pool_n
