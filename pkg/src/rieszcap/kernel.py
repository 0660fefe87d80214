"""Riesz kernel assembly, potentials of functions and measures, and norms."""

import enum
import math
from dataclasses import dataclass

import numpy as np


class DiagonalMode(enum.Enum):
    ZERO = "zero"
    SELF_MASS = "selfmass"


@dataclass(frozen=True)
class RieszParams:
    gamma: float
    p: float

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not 1 < self.p < math.inf:
            raise ValueError(f"p must lie in (1, inf), got {self.p}")

    @property
    def p_conj(self):
        return self.p / (self.p - 1)

    @property
    def gp(self):
        return self.gamma * self.p

    def require_subcritical(self):
        if not self.gp < 1:
            raise ValueError(f"gamma * p must be < 1, got {self.gp}")


@dataclass(frozen=True, eq=False)
class RieszKernel:
    """Dense table ``K[x, y] = mu(B(x, d(x, y)))**(gamma - 1)``.

    Not symmetric in general.  ``kind="tilde"`` holds the comparison kernel
    ``d(x, y)**gamma / mu(B(x, d(x, y)))`` instead.
    """

    space: object
    params: RieszParams
    K: np.ndarray
    diagonal_mode: DiagonalMode = DiagonalMode.ZERO
    kind: str = "riesz"

    @property
    def n(self):
        return self.K.shape[0]


def assemble_kernel(space, params, diagonal_mode=DiagonalMode.ZERO, kind="riesz"):
    """Assemble the Riesz kernel (or the ``tilde`` comparison kernel) of ``space``.

    The open ball ``B(x, d(x, y))`` always contains ``x``, so the base of the
    power is at least ``mass[x] > 0``.
    """
    diagonal_mode = DiagonalMode(diagonal_mode)
    g = params.gamma
    open_m = space.open_ball_table
    n = space.n
    off = ~np.eye(n, dtype=bool)
    K = np.zeros((n, n))
    if kind == "riesz":
        K[off] = open_m[off] ** (g - 1.0)
        if diagonal_mode is DiagonalMode.SELF_MASS:
            K[np.diag_indices(n)] = space.mass ** (g - 1.0)
    elif kind == "tilde":
        K[off] = space.dist[off] ** g / open_m[off]
        if diagonal_mode is DiagonalMode.SELF_MASS:
            raise ValueError("the tilde kernel has no self-mass diagonal")
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    K.setflags(write=False)
    return RieszKernel(space=space, params=params, K=K, diagonal_mode=diagonal_mode, kind=kind)


def _vec(kernel, v, name):
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (kernel.n,):
        raise ValueError(f"{name} must have length {kernel.n}, got shape {v.shape}")
    return v


def potential(kernel, f):
    """``(I f)[x] = sum_y K[x, y] f[y] mass[y]``.  Signed ``f`` is allowed."""
    f = _vec(kernel, f, "f")
    return kernel.K @ (f * kernel.space.mass)


def potential_of_measure(kernel, nu):
    """``(I nu)[x] = sum_y K[x, y] nu[y]``; ``nu`` is a measure, so no mass weight."""
    return kernel.K @ _vec(kernel, nu, "nu")


def adjoint_potential_of_measure(kernel, nu):
    """``y -> sum_x K[x, y] nu[x]``, the kernel applied in its first argument."""
    return kernel.K.T @ _vec(kernel, nu, "nu")


def lp_norm(space, f, p):
    f = np.abs(np.asarray(f, dtype=np.float64))
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if math.isinf(p):
        return float(f.max(initial=0.0))
    return float(np.sum(f ** p * space.mass) ** (1.0 / p))


def _levels(f):
    """Distinct positive values of ``|f|`` ascending, with 0 prepended."""
    a = np.abs(np.asarray(f, dtype=np.float64))
    return a, np.concatenate(([0.0], np.unique(a[a > 0])))


def weak_lp_norm(space, f, p):
    """``sup_t t * mu(|f| > t)**(1/p)``, evaluated as ``t`` rises to each breakpoint."""
    a, t = _levels(f)
    best = 0.0
    for k in range(1, t.size):
        m = space.mass[a >= t[k]].sum()
        best = max(best, t[k] * m ** (1.0 / p))
    return float(best)


def distribution_integral(space, f, p):
    """``int_0^inf p t^(p-1) mu(|f| > t) dt`` evaluated exactly on the level pieces."""
    a, t = _levels(f)
    total = 0.0
    for k in range(1, t.size):
        total += space.mass[a >= t[k]].sum() * (t[k] ** p - t[k - 1] ** p)
    return float(total)


def capacitary_lorentz_norm(capacity_oracle, f, p, q):
    """Capacitary Lorentz quasinorm ``||f||_{L^{p,q}(C)}``.

    ``capacity_oracle`` maps an index array (a level set ``{|f| > t}``) to its
    capacity.  The level set is constant for ``t`` in ``[t_k, t_{k+1})``
    between successive distinct values of ``|f|``, which makes the defining
    integral a finite sum; ``q = inf`` gives the weak capacitary norm.
    """
    a, t = _levels(f)
    if t.size == 1:
        return 0.0
    if math.isinf(q):
        best = 0.0
        for k in range(1, t.size):
            c = capacity_oracle(np.flatnonzero(a >= t[k]))
            best = max(best, t[k] * c ** (1.0 / p))
        return float(best)
    if q <= 0 or p <= 0:
        raise ValueError("p and q must be positive")
    total = 0.0
    for k in range(1, t.size):
        c = capacity_oracle(np.flatnonzero(a >= t[k]))
        total += c ** (q / p) * (t[k] ** q - t[k - 1] ** q)
    return float(total ** (1.0 / q))


def kernel_csv(kernel, path):
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "K"])
        for i in range(kernel.n):
            for j in range(kernel.n):
                w.writerow([i, j, repr(float(kernel.K[i, j]))])
