"""Dense primal active-set solver for small convex QPs.

Solves ``min 1/2 x^T G x + c^T x  s.t.  A x >= b`` with ``G`` positive
definite.  Used as the reference for the p = 2 capacity program.
"""

import numpy as np


class QPError(RuntimeError):
    pass


def active_set_qp(G, c, A, b, x0, max_iter=10_000, tol=1e-12):
    """Primal active-set method started from a feasible ``x0``.

    Returns ``(x, working_set, multipliers, iterations)``.
    """
    G = np.asarray(G, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    x = np.array(x0, dtype=np.float64)
    n_con = A.shape[0]
    scale = max(1.0, float(np.abs(A).max()))
    if np.any(A @ x < b - 1e-9 * scale):
        raise QPError("starting point is infeasible")
    W = []
    for i in np.flatnonzero(np.abs(A @ x - b) <= 1e-12 * scale):
        if _independent(A, W + [int(i)]):
            W.append(int(i))
    Ginv = np.linalg.inv(G)
    lam = np.zeros(0)
    for it in range(1, max_iter + 1):
        g = G @ x + c
        if W:
            AW = A[W]
            S = AW @ Ginv @ AW.T
            lam = np.linalg.lstsq(S, AW @ Ginv @ g, rcond=None)[0]
            step = -Ginv @ (g - AW.T @ lam)
        else:
            lam = np.zeros(0)
            step = -Ginv @ g
        if np.linalg.norm(step) <= tol * max(1.0, np.linalg.norm(x)):
            if lam.size == 0 or lam.min() >= -tol * max(1.0, np.abs(lam).max()):
                return x, list(W), lam, it
            W.pop(int(np.argmin(lam)))
            continue
        Ap = A @ step
        alpha = 1.0
        block = -1
        for i in range(n_con):
            if i in W or Ap[i] >= -1e-15 * scale:
                continue
            a_i = (b[i] - A[i] @ x) / Ap[i]
            if a_i < alpha:
                alpha = max(a_i, 0.0)
                block = i
        x = x + alpha * step
        if block >= 0:
            W.append(block)
    raise QPError(f"active-set QP did not converge in {max_iter} iterations")


def _independent(A, rows):
    M = A[rows]
    return np.linalg.matrix_rank(M) == len(rows)


def capacity_qp(kernel, E):
    """p = 2 capacity of ``E`` as a QP: ``min sum m f^2`` with ``I f >= 1`` on ``E``, ``f >= 0``.

    Returns ``(value, f)``.  Intended for ``n`` up to a few dozen points.
    """
    space = kernel.space
    mass = space.mass
    n = space.n
    E = np.asarray(sorted(set(int(e) for e in E)), dtype=int)
    if E.size == 0:
        return 0.0, np.zeros(n)
    Aw = kernel.K[E] * mass[None, :]
    A = np.vstack([Aw, np.eye(n)])
    b = np.concatenate([np.ones(E.size), np.zeros(n)])
    rowsum = Aw.sum(axis=1)
    if np.any(rowsum <= 0):
        raise ValueError("no admissible function: a kernel row vanishes on the set")
    x0 = np.full(n, 1.0 / rowsum.min())
    f, _, _, _ = active_set_qp(2.0 * np.diag(mass), np.zeros(n), A, b, x0)
    f = np.maximum(f, 0.0)
    return float(np.sum(mass * f * f)), f
