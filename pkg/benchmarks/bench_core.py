"""Time the compiled core against the pure-Python fallback.

    python benchmarks/bench_core.py [--repeat 5] [--n 400]
"""

import argparse
import time

import numpy as np

from rieszcap import _pycore
from rieszcap import spacegen as sg
from rieszcap.hausdorff import candidate_balls
from rieszcap.mmspace import closed_ball_mass

try:
    from rieszcap import _ccore
except ImportError:
    _ccore = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cover_instance(n, gamma_p, seed):
    sp = sg.random_cloud(np.random.default_rng(seed), n, 2)
    E = list(range(n))
    cands = candidate_balls(sp, E, lambda c, r: closed_ball_mass(sp, c, r) ** (1 - gamma_p))
    masks = [sum(1 << z for z in b.members) for b in cands]
    return masks, [b.weight for b in cands], (1 << n) - 1


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=400, help="points for the table and triangle kernels")
    ap.add_argument("--cover-n", type=int, default=18, help="points for the set-cover kernels")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if _ccore is None:
        raise SystemExit("compiled extension not built; run pip install -e . first")

    rng = np.random.default_rng(args.seed)
    sp = sg.random_cloud(rng, args.n, 2)
    radii = rng.uniform(0.01, 0.2, args.n)
    order = np.argsort(-radii, kind="stable").astype(np.intp)
    masks, w, U = cover_instance(args.cover_n, 0.2, args.seed)
    masks64 = np.array(masks, dtype=np.uint64)
    w64 = np.array(w)

    cases = [
        ("ball_mass_tables", lambda m: m.ball_mass_tables(sp.dist, sp.mass)),
        ("triangle_violation", lambda m: m.triangle_violation(sp.dist, 1e-12)),
        ("five_r_select", lambda m: m.five_r_select(sp.dist, radii, order)),
        ("greedy_cover", lambda m: m.greedy_cover(masks if m is _pycore else masks64,
                                                  w if m is _pycore else w64, U)),
        ("bnb_cover", lambda m: m.bnb_cover(masks if m is _pycore else masks64,
                                            w if m is _pycore else w64, U, 1 << 22)),
    ]
    print(f"n={args.n}, cover n={args.cover_n} ({len(masks)} candidates), best of {args.repeat}")
    print(f"{'kernel':<20}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for name, fn in cases:
        tp = best_of(lambda: fn(_pycore), args.repeat)
        tc = best_of(lambda: fn(_ccore), args.repeat)
        print(f"{name:<20}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
