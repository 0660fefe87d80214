"""Modified and classical Hausdorff contents by weighted set cover, and 5r covering.

On a finite space an open ball ``B(x, r)`` with ``r <= r_cap`` is the closed
ball of some realized radius ``rho < r_cap``, so candidates are enumerated
at realized distances from each center of ``E`` and the infimum is a minimum
over finitely many covers.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _core
from .mmspace import closed_ball_mass

DEFAULT_NODE_CAP = 2 ** 20
EXACT_MAX_ELEMENTS = 512


class SearchLimitExceeded(RuntimeError):
    """Exact search refused: the node budget ran out before optimality was proved."""


@dataclass(frozen=True)
class CandidateBall:
    center: int
    rho: float
    members: frozenset
    weight: float

    def to_dict(self):
        return {"center": self.center, "rho": self.rho, "weight": self.weight}


@dataclass
class CoverSolution:
    balls: list
    total_weight: float
    exact: bool
    nodes: int = 0

    def to_list(self):
        return [b.to_dict() for b in self.balls]


def _target(space, E):
    E = sorted(set(int(e) for e in E))
    if not E:
        raise ValueError("target set E must be nonempty")
    if E[0] < 0 or E[-1] >= space.n:
        raise IndexError(f"set contains an index outside 0..{space.n - 1}")
    return E


def candidate_balls(space, E, weight_fn, r_cap=math.inf, min_rho=0.0, prune_cap=4096):
    """Closed candidate balls centered in ``E`` with realized ``min_rho <= rho < r_cap``.

    Members are the points of ``E`` covered.  Dominated candidates (members a
    subset of another candidate's with no smaller weight) are dropped; the
    pairwise pass over centers runs only for at most ``prune_cap``
    candidates.  Survivors are sorted by ``(weight, center, rho)``.
    """
    E = _target(space, E)
    Eset = np.array(E)
    cands = []
    for c in E:
        row = space.dist[c]
        seen = set()
        for rho in np.unique(row):
            rho = float(rho)
            if rho >= r_cap or rho < min_rho:
                continue
            members = frozenset(int(z) for z in Eset[row[Eset] <= rho])
            if members in seen:
                # same E-points as a smaller radius, heavier or equal weight
                continue
            seen.add(members)
            cands.append(CandidateBall(int(c), rho, members, float(weight_fn(c, rho))))
    cands.sort(key=lambda b: (b.weight, b.center, b.rho))
    if len(cands) > prune_cap:
        return cands
    pos = {e: k for k, e in enumerate(E)}
    masks = [sum(1 << pos[z] for z in b.members) for b in cands]
    kept, kept_masks = [], []
    for b, m in zip(cands, masks):
        if any(m & km == m for km in kept_masks):
            continue
        kept.append(b)
        kept_masks.append(m)
    return kept


def _solve_cover(E, cands, mode, node_cap):
    pos = {e: k for k, e in enumerate(E)}
    universe = (1 << len(E)) - 1
    masks = [sum(1 << pos[z] for z in b.members) for b in cands]
    weights = [b.weight for b in cands]
    covered = 0
    for m in masks:
        covered |= m
    if covered != universe:
        raise ValueError("candidate balls do not cover E (is r_cap too small?)")
    if mode == "greedy":
        total, chosen = _core.greedy_cover(masks, weights, universe)
        return CoverSolution([cands[c] for c in chosen], float(total), exact=False)
    if mode == "exact":
        if len(E) > EXACT_MAX_ELEMENTS:
            raise SearchLimitExceeded(f"exact cover refused for |E| = {len(E)} > {EXACT_MAX_ELEMENTS}")
        total, chosen, nodes, complete = _core.bnb_cover(masks, weights, universe, node_cap)
        if not complete:
            raise SearchLimitExceeded(
                f"exact cover exceeded {node_cap} search nodes; incumbent weight {total:.6g}")
        return CoverSolution([cands[c] for c in sorted(chosen)], float(total), exact=True, nodes=nodes)
    raise ValueError(f"mode must be 'greedy' or 'exact', got {mode!r}")


def modified_content(space, params, E, r_cap=math.inf, mode="greedy", node_cap=DEFAULT_NODE_CAP):
    """Cover of ``E`` minimizing ``sum mu(B_i)**(1 - gamma p)`` over balls centered in ``E``."""
    params.require_subcritical()
    E = _target(space, E)
    expo = 1.0 - params.gp
    cands = candidate_balls(space, E, lambda c, rho: closed_ball_mass(space, c, rho) ** expo, r_cap)
    return _solve_cover(E, cands, mode, node_cap)


def classical_content(space, E, lam, r_cap=math.inf, mode="exact", positive_radii=False,
                      node_cap=DEFAULT_NODE_CAP):
    """``lam``-Hausdorff content with weights ``rho**lam`` (``0**0 = 1``).

    With ``positive_radii`` the radii are forced to be at least the smallest
    positive distance in the space, which rules out the free singleton covers.
    """
    E = _target(space, E)
    min_rho = float(space.dist[space.dist > 0].min()) if positive_radii and space.n > 1 else 0.0
    cands = candidate_balls(space, E, lambda c, rho: rho ** lam if lam > 0 else 1.0, r_cap, min_rho)
    sol = _solve_cover(E, cands, mode, node_cap)
    return sol.total_weight, sol


def five_r_cover(space, assignment):
    """Disjoint subfamily of ``{B(x, r_x)}`` whose 5-fold dilations cover every ``x``.

    Balls are taken by decreasing radius (ties by index) and kept when
    ``d(x, s) >= r_x + r_s`` for every kept ``s``, which makes the kept open
    balls pairwise disjoint.  A rejected ``x`` lies within ``r_x + r_s <= 2 r_s``
    of a kept ``s``.
    """
    items = sorted(((int(x), float(r)) for x, r in dict(assignment).items()), key=lambda t: (-t[1], t[0]))
    for x, r in items:
        if not r > 0:
            raise ValueError(f"radius for point {x} must be positive, got {r}")
    radii = np.zeros(space.n)
    for x, r in items:
        radii[x] = r
    order = np.array([x for x, _ in items], dtype=np.intp)
    chosen = _core.five_r_select(space.dist, radii, order)
    return [(x, float(radii[x])) for x in chosen]


def harmonic(k):
    return sum(1.0 / i for i in range(1, k + 1))


def dimension_profile(space, E, params_grid, tolerance=1e-6, mode="greedy"):
    """Rows ``(gamma, p, gamma p, content, capacity)`` across a ``(gamma, p)`` grid."""
    from .capacity import capacity
    from .kernel import RieszParams, assemble_kernel

    rows = []
    for gamma, p in params_grid:
        params = RieszParams(gamma, p)
        content = modified_content(space, params, E, mode=mode).total_weight
        cap = capacity(assemble_kernel(space, params), E, tolerance).primal_value
        rows.append({"gamma": gamma, "p": p, "gp": params.gp, "content": content, "capacity": cap})
    rows.sort(key=lambda r: (r["gp"], r["gamma"]))
    return rows
