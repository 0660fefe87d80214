"""Riesz (gamma, p)-capacity with two-sided certificates.

The primal program minimizes ``||f||_p^p`` over ``f >= 0`` with
``I f >= 1`` on ``E``.  Its Lagrange dual over measures ``nu >= 0`` on ``E``,

    D(nu) = nu(E) - (p - 1) * sum_y mass[y] * ((K^T nu)[y] / p)**p',

is smooth and concave with gradient ``1 - I f(nu)`` where
``f(nu) = (K^T nu / p)**(p' - 1)``.  Each iterate yields an upper bound
(``f(nu)`` rescaled to feasibility) and a lower bound
``(nu(E) / ||K^T nu||_{p'})**p`` from the Hoelder chain.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .kernel import DiagonalMode, RieszParams, assemble_kernel, potential
from .mmspace import ball_mass

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 50_000


@dataclass
class CapacityProblem:
    kernel: object
    E: np.ndarray
    tolerance: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        self.E = _as_set(self.E, self.kernel.n)
        if self.E.size == 0:
            raise ValueError("target set E must be nonempty")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


@dataclass
class CapacityResult:
    primal_f: np.ndarray
    dual_nu: np.ndarray
    primal_value: float
    dual_value: float
    gap: float
    iterations: int
    feasibility_slack: float
    converged: bool
    active_set: list = field(default_factory=list)

    @property
    def rel_gap(self):
        if self.primal_value == 0:
            return 0.0
        return self.gap / self.primal_value

    @property
    def value(self):
        return self.primal_value

    def to_dict(self):
        return {
            "primal_f": [float(v) for v in self.primal_f],
            "dual_nu": [float(v) for v in self.dual_nu],
            "primal_value": float(self.primal_value),
            "dual_value": float(self.dual_value),
            "gap": float(self.gap),
            "rel_gap": float(self.rel_gap),
            "iterations": int(self.iterations),
            "feasibility_slack": float(self.feasibility_slack),
            "converged": bool(self.converged),
            "active_set": [int(i) for i in self.active_set],
        }


def _as_set(E, n):
    E = np.asarray(sorted(set(int(e) for e in np.atleast_1d(np.asarray(E, dtype=np.int64)))),
                   dtype=np.int64) if np.size(E) else np.zeros(0, dtype=np.int64)
    if E.size and (E[0] < 0 or E[-1] >= n):
        raise IndexError(f"set contains an index outside 0..{n - 1}")
    return E


def dual_lower_bound(kernel, E, nu):
    """``(nu(E) / ||K^T nu||_{p'})**p``, a lower bound on the capacity of ``E``.

    ``nu`` may be given on ``E`` only (length ``|E|``) or on all points; in the
    latter case it must vanish off ``E``.
    """
    E = _as_set(E, kernel.n)
    nu = np.asarray(nu, dtype=np.float64)
    if nu.shape == (kernel.n,):
        off = np.ones(kernel.n, dtype=bool)
        off[E] = False
        if np.any(nu[off] != 0):
            raise ValueError("nu must vanish off E")
        nu = nu[E]
    if nu.shape != E.shape:
        raise ValueError("nu must have length |E| or n")
    if np.any(nu < 0):
        raise ValueError("nu must be nonnegative")
    if not np.any(nu > 0):
        raise ValueError("nu must not vanish identically")
    p = kernel.params.p
    q = kernel.params.p_conj
    u = kernel.K[E].T @ nu
    norm = np.sum(kernel.space.mass * u ** q) ** (1.0 / q)
    return float((nu.sum() / norm) ** p)


class _Dual:
    """Dual objective pieces on the restricted kernel ``A = K[E, :]``."""

    def __init__(self, kernel, E):
        self.A = np.ascontiguousarray(kernel.K[E])
        self.mass = kernel.space.mass
        self.p = kernel.params.p
        self.q = kernel.params.p_conj

    def __call__(self, nu):
        p, q, mass = self.p, self.q, self.mass
        u = self.A.T @ nu
        w = u / p
        f = w ** (q - 1.0)
        D = nu.sum() - (p - 1.0) * np.dot(mass, w ** q)
        If = self.A @ (mass * f)
        return D, 1.0 - If, u, f, If

    def rescale(self, nu):
        """Multiply ``nu`` by the maximizing factor along its ray."""
        u = self.A.T @ nu
        W = np.dot(self.mass, (u / self.p) ** self.q)
        return nu * (nu.sum() / (self.p * W)) ** (self.p - 1.0)

    def bounds(self, nu, u, f, If):
        mn = If.min()
        P = np.dot(self.mass, f ** self.p) / mn ** self.p if mn > 0 else math.inf
        L = (nu.sum() / np.dot(self.mass, u ** self.q) ** (1.0 / self.q)) ** self.p
        return P, L, mn


def _initial_nu(kernel, E, init):
    m = E.size
    if isinstance(init, str):
        if init == "uniform":
            return np.full(m, 1.0 / m)
        if init == "degree":
            deg = kernel.K[E] @ kernel.space.mass
            return deg / deg.sum()
        raise ValueError(f"unknown initialization {init!r}")
    nu = np.asarray(init, dtype=np.float64)
    if nu.shape == (kernel.n,):
        nu = nu[E]
    if nu.shape != (m,) or np.any(nu < 0) or not np.any(nu > 0):
        raise ValueError("initial nu must be nonnegative, nonzero, length |E| or n")
    return nu.copy()


def solve_capacity(problem, init="uniform", memory=10):
    """Solve the capacity program by projected gradient ascent on the dual.

    Steps follow the Barzilai-Borwein rule with a nonmonotone backtracking
    line search over the last ``memory`` objective values.  Iteration stops
    once the relative gap between the best upper and lower bounds seen so far
    is at most ``problem.tolerance``; otherwise the result is flagged
    ``converged=False`` after ``max_iter`` iterations.
    """
    kernel = problem.kernel
    E = problem.E
    n = kernel.n
    if n < 2 and kernel.diagonal_mode is DiagonalMode.ZERO:
        raise ValueError("a single-point space has no admissible function")
    dual = _Dual(kernel, E)
    nu = dual.rescale(_initial_nu(kernel, E, init))
    D, g, u, f, If = dual(nu)
    best_P, best_f = math.inf, None
    best_L, best_nu = 0.0, None
    hist = [D]
    alpha = 1.0
    it = 0
    converged = False
    for it in range(problem.max_iter + 1):
        P, L, mn = dual.bounds(nu, u, f, If)
        if P < best_P:
            best_P, best_f = P, f / mn
        if L > best_L:
            best_L, best_nu = L, nu.copy()
        if best_P - best_L <= problem.tolerance * best_P:
            converged = True
            break
        if it == problem.max_iter:
            break
        d = np.maximum(nu + alpha * g, 0.0) - nu
        gd = float(g @ d)
        if gd <= 0:
            # projected gradient vanished to rounding
            alpha = 1.0
            d = np.maximum(nu + g, 0.0) - nu
            gd = float(g @ d)
            if gd <= 0:
                break
        ref = min(hist[-memory:])
        lam = 1.0
        while True:
            trial = nu + lam * d
            Dt, gt, ut, ft, Ift = dual(trial)
            if Dt >= ref + 1e-4 * lam * gd or lam < 1e-14:
                break
            lam *= 0.5
        s = trial - nu
        y = g - gt
        sy = float(s @ y)
        alpha = float(s @ s) / sy if sy > 0 else 1e3 * alpha
        alpha = min(max(alpha, 1e-12), 1e12)
        nu, D, g, u, f, If = trial, Dt, gt, ut, ft, Ift
        hist.append(D)

    if best_f is None:
        raise RuntimeError("solver never produced a feasible primal point")
    If_best = potential(kernel, best_f)[E]
    nu_full = np.zeros(n)
    nu_full[E] = best_nu
    support = E[best_nu > 1e-12 * best_nu.max()]
    if not converged:
        log.warning("capacity solve stopped at %d iterations with relative gap %.3g",
                    it, (best_P - best_L) / best_P)
    return CapacityResult(
        primal_f=best_f,
        dual_nu=nu_full,
        primal_value=float(best_P),
        dual_value=float(best_L),
        gap=float(best_P - best_L),
        iterations=int(it),
        feasibility_slack=float(If_best.min() - 1.0),
        converged=converged,
        active_set=[int(i) for i in support],
    )


def empty_result(n):
    z = np.zeros(n)
    return CapacityResult(z, z.copy(), 0.0, 0.0, 0.0, 0, math.inf, True, [])


def capacity(kernel, E, tolerance=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, init="uniform"):
    """Certified capacity of ``E``; the empty set has capacity 0 without solving."""
    E = _as_set(E, kernel.n)
    if E.size == 0:
        return empty_result(kernel.n)
    return solve_capacity(CapacityProblem(kernel, E, tolerance, max_iter), init=init)


class CapacityOracle:
    """Memoized certified capacities on one kernel, keyed by the point set."""

    def __init__(self, kernel, tolerance=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
        self.kernel = kernel
        self.tolerance = tolerance
        self.max_iter = max_iter
        self._cache = {}

    def result(self, E):
        key = tuple(_as_set(E, self.kernel.n).tolist())
        if key not in self._cache:
            self._cache[key] = capacity(self.kernel, key, self.tolerance, self.max_iter)
        return self._cache[key]

    def upper(self, E):
        return self.result(E).primal_value

    def lower(self, E):
        return self.result(E).dual_value

    __call__ = upper


def first_order_residual(kernel, E, f, directions):
    """``min_g int f^(p-1) g dmu`` over directions ``g`` with ``I g >= 0`` on ``E``.

    The minimizer's first-order condition says this is ``>= 0`` (up to
    solver tolerance) for every admissible direction.
    """
    E = _as_set(E, kernel.n)
    p = kernel.params.p
    vals = []
    for g in directions:
        g = np.asarray(g, dtype=np.float64)
        if np.any(potential(kernel, g)[E] < -1e-12):
            continue
        vals.append(float(np.sum(kernel.space.mass * f ** (p - 1) * g)))
    return min(vals) if vals else math.inf


# ---------------------------------------------------------------- balls

def ball_admissible(space, profile, params, center, radius):
    """The explicit test function ``c_d^2 3^{Q(1-gamma)} chi_B / mu(B)^gamma`` for ``B = B(center, radius)``."""
    params.require_subcritical()
    mB = ball_mass(space, center, radius)
    if mB <= 0:
        raise ValueError(f"ball B({center}, {radius}) is empty")
    members = space.ball_members(center, radius)
    g = np.zeros(space.n)
    g[members] = profile.c_d ** 2 * 3.0 ** (profile.Q * (1 - params.gamma)) / mB ** params.gamma
    return g


def ball_bound(space, profile, params, center, radius):
    """``c_d^{2p} 3^{Q(1-gamma)p} mu(B)^{1-gamma p}``, the norm of the explicit test function."""
    mB = ball_mass(space, center, radius)
    return profile.ball_constant(params.gamma, params.p) * mB ** (1 - params.gp)


def critical_radii(space, center):
    """One open radius per distinct closed ball around ``center``.

    Between consecutive distinct distances ``d_k < d_{k+1}`` the open ball of
    radius ``(d_k + d_{k+1}) / 2`` is the closed ball of radius ``d_k``; past
    the largest distance ``1.5 * d_max`` is used.
    """
    ds = space.distinct_distances(center)
    mids = (ds[:-1] + ds[1:]) / 2
    return np.concatenate((mids, [1.5 * ds[-1]]))


@dataclass
class BallRow:
    center: int
    radius: float
    ball_mass: float
    capacity: float
    ball_bound: float
    ratio: float
    test_margin: float
    passed: bool


def capacity_of_balls_report(space, params, profile=None, kernel=None, tolerance=DEFAULT_TOL,
                             centers=None, test_kernel=None):
    """Capacity of every (center, critical radius) ball against the ball bound.

    ``test_margin`` is ``min_B I g - 1`` for the explicit test function,
    evaluated with ``test_kernel`` (default: the self-mass kernel, under which
    every point of the ball, its center included, contributes to the
    integral).
    """
    from .mmspace import doubling_profile

    params.require_subcritical()
    if profile is None:
        profile = doubling_profile(space)
    if kernel is None:
        kernel = assemble_kernel(space, params)
    if test_kernel is None:
        test_kernel = assemble_kernel(space, params, DiagonalMode.SELF_MASS)
    oracle = CapacityOracle(kernel, tolerance)
    rows = []
    for x in (range(space.n) if centers is None else centers):
        for r in critical_radii(space, x):
            members = space.ball_members(x, r)
            cap = oracle.upper(members)
            bound = ball_bound(space, profile, params, x, r)
            g = ball_admissible(space, profile, params, x, r)
            margin = float(potential(test_kernel, g)[members].min() - 1.0)
            ratio = cap / bound
            rows.append(BallRow(int(x), float(r), ball_mass(space, x, r), cap, bound, ratio,
                                margin, bool(ratio <= 1 + tolerance)))
    return rows
