"""Pure-Python/numpy implementations of the hot kernels.

Every function here has a twin in ``_ccore.pyx`` with the same signature and
the same results (bit-for-bit for the integer/combinatorial routines, to
rounding for the float tables).  ``rieszcap._core`` picks one at import.
"""

import numpy as np

BACKEND = "python"


def ball_mass_tables(dist, mass):
    """Open and closed ball masses at every realized distance.

    Returns ``(open_m, closed_m)`` with ``open_m[i, j] = mu(B(i, d_ij))`` and
    ``closed_m[i, j] = mu(closed B(i, d_ij))``.
    """
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    mass = np.ascontiguousarray(mass, dtype=np.float64)
    n = dist.shape[0]
    open_m = np.empty((n, n))
    closed_m = np.empty((n, n))
    for i in range(n):
        row = dist[i]
        order = np.argsort(row, kind="stable")
        srt = row[order]
        prefix = np.concatenate(([0.0], np.cumsum(mass[order])))
        open_m[i] = prefix[np.searchsorted(srt, row, side="left")]
        closed_m[i] = prefix[np.searchsorted(srt, row, side="right")]
    return open_m, closed_m


def triangle_violation(dist, rtol):
    """First triple ``(i, j, k)`` with ``d_ik > d_ij + d_jk + rtol * max(d)``."""
    dist = np.asarray(dist, dtype=np.float64)
    n = dist.shape[0]
    slack = rtol * (dist.max() if n else 0.0)
    for j in range(n):
        via = dist[:, j][:, None] + dist[j, :][None, :]
        bad = dist > via + slack
        if bad.any():
            i, k = np.argwhere(bad)[0]
            return int(i), int(j), int(k)
    return None


def five_r_select(dist, radii, order):
    """Greedy disjoint selection: keep ``i`` if ``d(i, s) >= r_i + r_s`` for kept ``s``."""
    chosen = []
    for i in order:
        i = int(i)
        ok = True
        for s in chosen:
            if dist[i, s] < radii[i] + radii[s]:
                ok = False
                break
        if ok:
            chosen.append(i)
    return chosen


def greedy_cover(masks, weights, universe):
    """Greedy weighted set cover over Python-int bitmasks.

    Picks the candidate minimizing weight per newly covered element; ties go
    to the lowest index, so callers control tie-breaking by candidate order.
    """
    uncovered = universe
    chosen = []
    total = 0.0
    while uncovered:
        best = -1
        best_ratio = np.inf
        for c, m in enumerate(masks):
            gain = bin(m & uncovered).count("1")
            if gain == 0:
                continue
            ratio = weights[c] / gain
            if ratio < best_ratio:
                best_ratio = ratio
                best = c
        if best < 0:
            raise ValueError("candidates do not cover the universe")
        chosen.append(best)
        total += weights[best]
        uncovered &= ~masks[best]
    return total, chosen


class _NodeCapExceeded(Exception):
    pass


def bnb_cover(masks, weights, universe, node_cap):
    """Exact minimum-weight set cover by depth-first branch and bound.

    Returns ``(total, chosen, nodes, complete)``; ``complete`` is False when the
    node budget ran out (the incumbent is then only an upper bound).
    """
    masks = [int(m) for m in masks]
    weights = [float(w) for w in weights]
    elems = []
    u = universe
    while u:
        low = u & -u
        elems.append(low.bit_length() - 1)
        u ^= low
    containing = {e: [c for c, m in enumerate(masks) if (m >> e) & 1] for e in elems}
    for e in elems:
        if not containing[e]:
            raise ValueError("candidates do not cover the universe")
    # lowest-frequency element first; stable on element index
    branch_order = sorted(elems, key=lambda e: (len(containing[e]), e))
    for e in elems:
        containing[e].sort(key=lambda c: (weights[c] / bin(masks[c] & universe).count("1"), c))

    best_total, best_chosen = greedy_cover(masks, weights, universe)
    best = [best_total, list(best_chosen)]
    nodes = [0]

    def lower_bound(uncovered):
        lb = 0.0
        for e in elems:
            if not (uncovered >> e) & 1:
                continue
            price = np.inf
            for c in containing[e]:
                gain = bin(masks[c] & uncovered).count("1")
                v = weights[c] / gain
                if v < price:
                    price = v
            lb += price
        return lb

    def visit(covered, cost, chosen):
        nodes[0] += 1
        if nodes[0] > node_cap:
            raise _NodeCapExceeded
        uncovered = universe & ~covered
        if not uncovered:
            if cost < best[0] * (1.0 - 1e-12):
                best[0] = cost
                best[1] = list(chosen)
            return
        if cost + lower_bound(uncovered) >= best[0] * (1.0 - 1e-12):
            return
        for e in branch_order:
            if (uncovered >> e) & 1:
                break
        for c in containing[e]:
            chosen.append(c)
            visit(covered | masks[c], cost + weights[c], chosen)
            chosen.pop()

    try:
        visit(0, 0.0, [])
    except _NodeCapExceeded:
        return best[0], sorted(best[1]), nodes[0], False
    return best[0], sorted(best[1]), nodes[0], True
