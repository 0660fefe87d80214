"""Finite metric measure spaces, ball masses and doubling profiles.

Balls follow the open convention ``B(x, r) = {y : d(x, y) < r}``; the closed
variant is provided because infima over open radii are attained at closed
balls on a finite space.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _core

TRIANGLE_EXHAUSTIVE_CAP = 512
TRIANGLE_SAMPLES = 100_000


class SpaceError(ValueError):
    """Raised when a metric table or mass vector violates the space invariants."""


def snap_distances(dist, rtol=1e-12):
    """Merge distance values that agree to ``rtol`` so ties survive rounding.

    Coordinates pushed through floating point produce distances that should
    coincide but differ in the last bits; ball membership is decided by exact
    comparison, so near-ties are collapsed onto the smallest value of each
    cluster.  Symmetry is preserved because the map acts on values.
    """
    dist = np.array(dist, dtype=np.float64)
    vals = np.unique(dist)
    if vals.size < 2:
        return dist
    rep = vals.copy()
    for k in range(1, vals.size):
        if vals[k] - rep[k - 1] <= rtol * vals[k]:
            rep[k] = rep[k - 1]
    idx = np.searchsorted(vals, dist)
    return rep[idx]


class MetricMeasureSpace:
    """A finite point set with a metric table and strictly positive point masses.

    Parameters
    ----------
    dist : array_like, shape (n, n)
        Symmetric distance table with zero diagonal and positive off-diagonal.
    mass : array_like, shape (n,)
        Point masses, finite and strictly positive.
    labels : sequence of str, optional
    check_triangle : bool
        Verify the triangle inequality; exhaustive for ``n <= triangle_cap``,
        otherwise on ``TRIANGLE_SAMPLES`` random triples.
    snap : bool
        Collapse near-tied distances (see :func:`snap_distances`).

    Instances are treated as immutable; derived tables are cached.
    """

    def __init__(self, dist, mass, labels=None, *, check_triangle=True,
                 triangle_cap=TRIANGLE_EXHAUSTIVE_CAP, snap=True, seed=0):
        dist = np.array(dist, dtype=np.float64)
        mass = np.array(mass, dtype=np.float64)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise SpaceError(f"dist must be square, got shape {dist.shape}")
        n = dist.shape[0]
        if n == 0:
            raise SpaceError("space must contain at least one point")
        if mass.shape != (n,):
            raise SpaceError(f"mass must have length {n}, got shape {mass.shape}")
        bad = np.flatnonzero(~np.isfinite(mass) | (mass <= 0))
        if bad.size:
            i = int(bad[0])
            raise SpaceError(f"mass[{i}] = {float(mass[i])!r} must be finite and > 0")
        if not np.all(np.isfinite(dist)):
            i, j = np.argwhere(~np.isfinite(dist))[0]
            raise SpaceError(f"dist[{i}][{j}] is not finite")
        diag = np.flatnonzero(np.diag(dist) != 0)
        if diag.size:
            i = int(diag[0])
            raise SpaceError(f"dist[{i}][{i}] = {float(dist[i, i])!r} must be 0")
        asym = np.argwhere(dist != dist.T)
        if asym.size:
            i, j = asym[0]
            raise SpaceError(
                f"dist is not symmetric: dist[{i}][{j}] = {float(dist[i, j])!r} "
                f"but dist[{j}][{i}] = {float(dist[j, i])!r}")
        off = dist + np.eye(n)
        nonpos = np.argwhere(off <= 0)
        if nonpos.size:
            i, j = nonpos[0]
            raise SpaceError(f"dist[{i}][{j}] = {float(dist[i, j])!r} must be > 0 for distinct points")
        if snap:
            dist = snap_distances(dist)
        if labels is not None:
            labels = [str(s) for s in labels]
            if len(labels) != n:
                raise SpaceError(f"labels must have length {n}, got {len(labels)}")
        if check_triangle:
            _check_triangle(dist, triangle_cap, seed)
        dist.setflags(write=False)
        mass.setflags(write=False)
        self.dist = dist
        self.mass = mass
        self.labels = labels

    @property
    def n(self):
        return self.mass.shape[0]

    def __repr__(self):
        return f"MetricMeasureSpace(n={self.n}, total_mass={self.mass.sum():.6g})"

    @cached_property
    def _tables(self):
        open_m, closed_m = _core.ball_mass_tables(self.dist, self.mass)
        open_m.setflags(write=False)
        closed_m.setflags(write=False)
        return open_m, closed_m

    @property
    def open_ball_table(self):
        """``T[i, j] = mu(B(i, d(i, j)))`` with the open ball."""
        return self._tables[0]

    @property
    def closed_ball_table(self):
        """``T[i, j] = mu(closed B(i, d(i, j)))``."""
        return self._tables[1]

    @cached_property
    def _sorted_rows(self):
        order = np.argsort(self.dist, axis=1, kind="stable")
        srt = np.take_along_axis(self.dist, order, axis=1)
        prefix = np.zeros((self.n, self.n + 1))
        prefix[:, 1:] = np.cumsum(self.mass[order], axis=1)
        return srt, prefix

    def distinct_distances(self, center):
        """Sorted distinct distances from ``center``, starting with 0."""
        return np.unique(self.dist[_index(self, center)])

    def ball_members(self, center, radius, closed=False):
        row = self.dist[_index(self, center)]
        return np.flatnonzero(row <= radius if closed else row < radius)

    def total_mass(self):
        return float(self.mass.sum())

    def scaled(self, factor):
        """Same metric, masses multiplied by ``factor``."""
        return MetricMeasureSpace(self.dist, self.mass * factor, self.labels,
                                  check_triangle=False, snap=False)

    def permuted(self, perm):
        perm = np.asarray(perm)
        labels = None if self.labels is None else [self.labels[i] for i in perm]
        return MetricMeasureSpace(self.dist[np.ix_(perm, perm)], self.mass[perm], labels,
                                  check_triangle=False, snap=False)


def _index(space, center):
    i = int(center)
    if not 0 <= i < space.n or i != center:
        raise IndexError(f"point index {center!r} out of range for n={space.n}")
    return i


def _check_triangle(dist, cap, seed, rtol=1e-12):
    n = dist.shape[0]
    if n < 3:
        return
    if n <= cap:
        hit = _core.triangle_violation(dist, rtol)
    else:
        rng = np.random.default_rng(seed)
        i, j, k = rng.integers(0, n, size=(3, TRIANGLE_SAMPLES))
        bad = np.flatnonzero(dist[i, k] > dist[i, j] + dist[j, k] + rtol * dist.max())
        hit = None if bad.size == 0 else (int(i[bad[0]]), int(j[bad[0]]), int(k[bad[0]]))
    if hit is not None:
        i, j, k = hit
        raise SpaceError(
            f"triangle inequality fails: dist[{i}][{k}] = {float(dist[i, k])!r} > "
            f"dist[{i}][{j}] + dist[{j}][{k}] = {float(dist[i, j] + dist[j, k])!r}")


def ball_mass(space, center, radius):
    """Mass of the open ball ``{z : d(center, z) < radius}``."""
    i = _index(space, center)
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    srt, prefix = space._sorted_rows
    return float(prefix[i, np.searchsorted(srt[i], radius, side="left")])


def closed_ball_mass(space, center, radius):
    """Mass of the closed ball ``{z : d(center, z) <= radius}``."""
    i = _index(space, center)
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    srt, prefix = space._sorted_rows
    return float(prefix[i, np.searchsorted(srt[i], radius, side="right")])


def sphere_mass(space, center, radius):
    return closed_ball_mass(space, center, radius) - ball_mass(space, center, radius)


@dataclass(frozen=True)
class DoublingProfile:
    """Empirical doubling and reverse-doubling constants of a finite space.

    ``c_d`` is the exact supremum of ``mu(B(x, 2r)) / mu(B(x, r))`` over all
    centers and radii, ``Q = log2(c_d)`` and ``C_lower = c_d**-2`` give the
    lower mass bound, and ``(s, C_upper)`` is the reverse-doubling fit over
    positive realized radii.
    """

    c_d: float
    Q: float
    C_lower: float
    s: float
    C_upper: float
    witness_pairs: list = field(default_factory=list, compare=False, repr=False)
    rows: list = field(default_factory=list, compare=False, repr=False)

    def ball_constant(self, gamma, p):
        """``c_d^{2p} 3^{Q (1 - gamma) p}``, the ball-capacity constant."""
        return self.c_d ** (2 * p) * 3.0 ** (self.Q * (1 - gamma) * p)


def doubling_rows(space):
    """All ``(center, radius, ratio)`` rows that determine ``c_d``.

    The ratio ``mu(B(x, 2r)) / mu(B(x, r))`` is piecewise constant in ``r``
    with the denominator fixed on ``(d_k, d_{k+1}]`` (consecutive distinct
    distances from ``x``) while the numerator grows, so the supremum over each
    piece is attained at ``r = d_{k+1}``.  Beyond the largest distance the
    ratio is 1.
    """
    rows = []
    srt, prefix = space._sorted_rows
    for x in range(space.n):
        ds = space.distinct_distances(x)
        for k in range(1, ds.size):
            r = float(ds[k])
            den = prefix[x, np.searchsorted(srt[x], r, side="left")]
            num = prefix[x, np.searchsorted(srt[x], 2 * r, side="left")]
            rows.append((x, r, float(num / den)))
    return rows


def reverse_doubling_constant(space, s, centers=None):
    """Smallest ``C`` with ``mu(B(z, r)) / mu(B(y, R)) <= C (r / R)**s`` on realized radii.

    Pairs range over centers ``y``, positive radii ``R`` realized from ``y``
    (closed balls), points ``z`` of that ball and positive radii ``r <= R``
    realized from ``z``.  Returns ``(C, witness)``.
    """
    dist = space.dist
    closed = space.closed_ball_table
    n = space.n
    U = np.unique(dist[dist > 0])
    if U.size == 0:
        return 1.0, None
    # H[z, u] = max over positive realized r <= U[u] of closed_mass(z, r) * r**-s
    H = np.full((n, U.size), -np.inf)
    for z in range(n):
        pos = dist[z] > 0
        rz = dist[z][pos]
        vz = closed[z][pos] * rz ** (-s)
        order = np.argsort(rz)
        rz, vz = rz[order], np.maximum.accumulate(vz[order])
        at = np.searchsorted(rz, U, side="right") - 1
        ok = at >= 0
        H[z, ok] = vz[at[ok]]
    best = 0.0
    witness = None
    ys = range(n) if centers is None else centers
    uidx = np.searchsorted(U, dist)
    for y in ys:
        order = np.argsort(dist[y], kind="stable")
        cum = np.maximum.accumulate(H[order], axis=0)
        srt = dist[y][order]
        for R in np.unique(dist[y][dist[y] > 0]):
            last = np.searchsorted(srt, R, side="right") - 1
            u = uidx[y, order[last]]
            val = cum[last, u] * R ** s / closed[y, order[last]]
            if val > best:
                best = float(val)
                witness = (int(y), float(R))
    return best, witness


def doubling_profile(space, s_step=0.01, s_max=10.0, c_upper_cap=100.0, max_centers=256, seed=0):
    """Profile doubling (``c_d``, ``Q``, ``C_lower``) and reverse doubling (``s``, ``C_upper``).

    ``s`` is the largest grid value ``k * s_step <= s_max`` for which the
    reverse-doubling constant stays below ``c_upper_cap``; the constant is
    nondecreasing in ``s`` so the grid is bisected.  Above ``max_centers``
    outer centers are subsampled for the fit.
    """
    if space.n < 2:
        raise ValueError("doubling profile needs at least two points")
    rows = doubling_rows(space)
    ratios = np.array([r[2] for r in rows])
    c_d = float(ratios.max())
    Q = math.log2(c_d)
    witnesses = [rows[i] for i in np.flatnonzero(ratios == c_d)]

    centers = None
    if space.n > max_centers:
        centers = np.sort(np.random.default_rng(seed).choice(space.n, max_centers, replace=False))
    grid = np.round(np.arange(1, int(round(s_max / s_step)) + 1) * s_step, 10)
    lo, hi = -1, grid.size
    cache = {}

    def const(k):
        if k not in cache:
            cache[k] = reverse_doubling_constant(space, float(grid[k]), centers)
        return cache[k]

    while hi - lo > 1:
        mid = (lo + hi) // 2
        if const(mid)[0] <= c_upper_cap:
            lo = mid
        else:
            hi = mid
    if lo < 0:
        s = float(grid[0])
        C_upper, wit = const(0)
    else:
        s = float(grid[lo])
        C_upper, wit = const(lo)
    if wit is not None:
        witnesses = witnesses + [(wit[0], wit[1], C_upper)]
    return DoublingProfile(c_d=c_d, Q=Q, C_lower=c_d ** -2, s=s, C_upper=C_upper,
                           witness_pairs=witnesses, rows=rows)


def ahlfors_constant(space, Q):
    """Smallest ``C >= 1`` with ``C^-1 d^Q <= mu(B(x, d)) <= C d^Q`` on realized ``d > 0``.

    Open balls; the range matches the kernel entries it is used to compare.
    """
    off = ~np.eye(space.n, dtype=bool)
    ratio = space.open_ball_table[off] / space.dist[off] ** Q
    return float(max(ratio.max(), 1.0 / ratio.min(), 1.0))


def profile_csv(profile, path):
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["center", "radius", "ratio"])
        for c, r, q in profile.rows:
            w.writerow([c, repr(float(r)), repr(float(q))])
