"""Finite boxes and tori in Z^d.

Points are stored as integer coordinate vectors with entries in ``[0, L)``
and addressed by their row-major linear index (first coordinate most
significant).  All distances are Euclidean; on a torus the minimal-image
displacement is used.
"""

from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np

from .errors import DomainError, ResourceError

FREE = "free"
TORUS = "torus"

_INDEX_LIMIT = 2**62


def _floor_square(r):
    """Largest integer n with n <= r*r, computed exactly from the float ``r``."""
    return math.floor(Fraction(r) ** 2)


@dataclass(frozen=True)
class LatticeBox:
    d: int
    side: int
    boundary: str = TORUS

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.d!r}")
        if int(self.side) != self.side or self.side < 1:
            raise DomainError(f"side must be a positive integer, got {self.side!r}")
        if self.boundary not in (FREE, TORUS):
            raise DomainError(f"boundary must be 'free' or 'torus', got {self.boundary!r}")
        if self.side**self.d >= _INDEX_LIMIT:
            raise ResourceError(f"box with {self.side}^{self.d} points overflows the index type")

    @property
    def point_count(self):
        return self.side**self.d

    @property
    def strides(self):
        return tuple(self.side ** (self.d - 1 - k) for k in range(self.d))

    def point_to_index(self, p):
        p = tuple(int(c) for c in p)
        if len(p) != self.d:
            raise DomainError(f"expected a point with {self.d} coordinates, got {len(p)}")
        idx = 0
        for c in p:
            if not 0 <= c < self.side:
                raise DomainError(f"coordinate {c} outside [0, {self.side})")
            idx = idx * self.side + c
        return idx

    def index_to_point(self, i):
        i = int(i)
        if not 0 <= i < self.point_count:
            raise DomainError(f"index {i} outside [0, {self.point_count})")
        out = []
        for _ in range(self.d):
            i, c = divmod(i, self.side)
            out.append(c)
        return tuple(reversed(out))

    def coordinates(self, indices=None):
        """Coordinates of ``indices`` (all points if omitted) as an ``(n, d)`` int64 array."""
        if indices is None:
            indices = np.arange(self.point_count, dtype=np.int64)
        rem = np.asarray(indices, dtype=np.int64).copy()
        out = np.empty((rem.size, self.d), dtype=np.int64)
        for k in range(self.d - 1, -1, -1):
            out[:, k] = rem % self.side
            rem //= self.side
        return out

    def indices_of(self, coords):
        coords = np.asarray(coords, dtype=np.int64)
        idx = np.zeros(coords.shape[0], dtype=np.int64)
        for k in range(self.d):
            idx = idx * self.side + coords[:, k]
        return idx

    def displacement(self, p, q):
        """Componentwise ``q - p`` (minimal image on a torus), as int64 array(s)."""
        diff = np.asarray(q, dtype=np.int64) - np.asarray(p, dtype=np.int64)
        if self.boundary == TORUS:
            diff = np.mod(diff, self.side)
            diff = np.where(diff > self.side // 2, diff - self.side, diff)
        return diff

    def squared_norms(self, p, q):
        diff = self.displacement(p, q)
        return np.sum(diff * diff, axis=-1)

    def displacement_norm(self, p, q):
        return float(math.sqrt(int(self.squared_norms(p, q))))

    def ball_indices(self, center, r):
        """Indices ``q != center`` within distance ``r`` of ``center``, ascending."""
        if r < 0:
            raise DomainError("radius must be nonnegative")
        center = np.asarray(center, dtype=np.int64)
        r2 = _floor_square(r)
        reach = math.isqrt(r2)
        if (2 * reach + 1) ** self.d >= self.point_count:
            cand = self.coordinates()
        else:
            offs = np.stack(
                np.meshgrid(*[np.arange(-reach, reach + 1)] * self.d, indexing="ij"), axis=-1
            ).reshape(-1, self.d)
            cand = center + offs
            if self.boundary == TORUS:
                cand = np.unique(np.mod(cand, self.side), axis=0)
            else:
                cand = cand[np.all((cand >= 0) & (cand < self.side), axis=1)]
        n2 = self.squared_norms(center, cand)
        keep = (n2 <= r2) & (n2 > 0)
        return np.sort(self.indices_of(cand[keep]))


def ball_offsets(d, r):
    """Nonzero integer vectors with norm <= r, ordered by squared norm then lexicographically.

    Returns ``(offsets, squared_norms)``.
    """
    r2 = _floor_square(r)
    reach = math.isqrt(r2)
    axes = [np.arange(-reach, reach + 1, dtype=np.int64)] * d
    offs = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    n2 = np.sum(offs * offs, axis=1)
    keep = (n2 > 0) & (n2 <= r2)
    offs, n2 = offs[keep], n2[keep]
    order = np.lexsort(tuple(offs[:, k] for k in range(d - 1, -1, -1)) + (n2,))
    return offs[order], n2[order]


def shell_counts(d, r):
    """Number of lattice points on each sphere ``|x|^2 = n`` for ``0 < n <= r^2``.

    Returns ``(n_values, counts)`` restricted to nonempty shells.
    """
    r2 = _floor_square(r)
    if r2 == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    reach = math.isqrt(r2)
    sq = np.arange(reach + 1, dtype=np.int64) ** 2
    mult_1d = np.where(sq > 0, 2, 1)
    # enumerate the nonnegative orthant, weighting each point by its sign flips
    s = np.zeros(1, dtype=np.int64)
    mult = np.ones(1, dtype=np.int64)
    for _ in range(d):
        s = (s[:, None] + sq[None, :]).ravel()
        mult = (mult[:, None] * mult_1d[None, :]).ravel()
        keep = s <= r2
        s, mult = s[keep], mult[keep]
    n, inverse = np.unique(s, return_inverse=True)
    counts = np.bincount(inverse, weights=mult).astype(np.int64)
    keep = n > 0
    return n[keep].astype(np.int64), counts[keep]
