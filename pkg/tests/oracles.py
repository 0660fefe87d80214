"""Slow, independent reference implementations used only by the tests."""

import itertools
import math

import numpy as np
from scipy import integrate, optimize


def ball_mass(dist, mass, x, r, closed=False):
    tot = 0.0
    for z in range(len(mass)):
        if (dist[x][z] <= r) if closed else (dist[x][z] < r):
            tot += mass[z]
    return tot


def kernel_table(dist, mass, gamma, selfmass=False):
    n = len(mass)
    K = np.zeros((n, n))
    for x in range(n):
        for y in range(n):
            if x != y:
                K[x, y] = ball_mass(dist, mass, x, dist[x][y]) ** (gamma - 1)
            elif selfmass:
                K[x, y] = mass[x] ** (gamma - 1)
    return K


def doubling_constant(dist, mass):
    """Sup of mu(B(x, 2r)) / mu(B(x, r)) evaluated on every piece of constancy.

    Open-ball masses are left-continuous step functions of ``r`` with jumps at
    distances, so the ratio is constant on the intervals between consecutive
    points of ``{d} U {d / 2}`` and attains its value at the right endpoint.
    """
    n = len(mass)
    best = 1.0
    for x in range(n):
        ds = sorted(set(float(d) for d in dist[x]))
        brk = sorted(set(ds + [d / 2 for d in ds]) - {0.0})
        pts = brk + [(a + b) / 2 for a, b in zip(brk, brk[1:])] + [2 * brk[-1]]
        for r in pts:
            den = ball_mass(dist, mass, x, r)
            if den > 0:
                best = max(best, ball_mass(dist, mass, x, 2 * r) / den)
    return best


def qp_capacity_enum(K, mass, E):
    """p = 2 capacity by enumerating the active constraint sets (tiny n only).

    Every feasible point satisfying the equality-restricted optimality system
    of some active set is a candidate; the convex optimum is the smallest
    feasible candidate.
    """
    n = len(mass)
    E = list(E)
    A = K[E] * mass[None, :]
    best = math.inf
    for ka in range(1, len(E) + 1):
        for S in itertools.combinations(range(len(E)), ka):
            for kz in range(0, n):
                for Z in itertools.combinations(range(n), kz):
                    free = [j for j in range(n) if j not in Z]
                    As = A[np.ix_(list(S), free)]
                    Minv = 1.0 / mass[free]
                    G = (As * Minv) @ As.T
                    try:
                        lam = np.linalg.solve(G, np.ones(len(S)))
                    except np.linalg.LinAlgError:
                        continue
                    f = np.zeros(n)
                    f[free] = Minv * (As.T @ lam)
                    if np.any(f < -1e-12) or np.any(A @ f < 1 - 1e-10):
                        continue
                    best = min(best, float(np.sum(mass * f * f)))
    return best


def nlp_capacity(K, mass, E, p):
    """General-p capacity through SciPy's SLSQP; accurate to roughly 1e-6."""
    n = len(mass)
    A = K[list(E)] * mass[None, :]
    x0 = np.full(n, 1.0 / A.sum(axis=1).min())
    res = optimize.minimize(
        lambda f: np.sum(mass * np.abs(f) ** p), x0,
        jac=lambda f: p * mass * np.abs(f) ** (p - 1) * np.sign(f),
        constraints=[{"type": "ineq", "fun": lambda f: A @ f - 1, "jac": lambda f: A}],
        bounds=[(0, None)] * n, method="SLSQP", options={"ftol": 1e-14, "maxiter": 2000})
    return float(res.fun)


def cover_enum(members, weights, universe):
    """Minimum-weight cover by trying every subfamily."""
    best = math.inf
    m = len(members)
    for mask in range(1 << m):
        cov = set()
        w = 0.0
        for i in range(m):
            if mask >> i & 1:
                cov |= members[i]
                w += weights[i]
        if cov >= universe:
            best = min(best, w)
    return best


def euclidean_midpoint_potential(gamma, x=0.5):
    """Continuum potential of the constant 1 on [0, 1] with Lebesgue ball measure."""
    def ball(t):
        return min(x + t, 1.0) - max(x - t, 0.0)

    f = lambda y: ball(abs(x - y)) ** (gamma - 1)
    left = integrate.quad(f, 0, x, limit=200)[0]
    right = integrate.quad(f, x, 1, limit=200)[0]
    return left + right
