"""Command line interface: ``rieszcap <command> ...``.

Exit status is 0 on success, 1 when a check fails or a solve does not
converge, and 2 on usage or input errors.
"""

import argparse
import json
import logging
import math
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, _core
from . import spacegen as sg
from .capacity import DEFAULT_MAX_ITER, DEFAULT_TOL, capacity, capacity_of_balls_report
from .hausdorff import SearchLimitExceeded, dimension_profile, modified_content
from .kernel import (DiagonalMode, RieszParams, adjoint_potential_of_measure, assemble_kernel,
                     kernel_csv, potential, potential_of_measure)
from .mmspace import SpaceError, doubling_profile, profile_csv
from .theorems import SUITES, reports_csv, run_suite

log = logging.getLogger("rieszcap")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parsing helpers

def parse_set(text, space):
    """``"0,3,7"``, ranges ``"2-5"`` (inclusive), ``"all"`` or ``"ball:center,radius"`` (open ball)."""
    text = text.strip()
    if text == "all":
        return list(range(space.n))
    if text.startswith("ball:"):
        try:
            c, r = text[5:].split(",")
            c, r = int(c), float(r)
        except ValueError:
            raise UsageError(f"bad ball set {text!r}; expected ball:center,radius") from None
        if not 0 <= c < space.n:
            raise UsageError(f"ball center {c} out of range 0..{space.n - 1}")
        return [int(i) for i in space.ball_members(c, r)]
    out = set()
    for tok in filter(None, (t.strip() for t in text.split(","))):
        try:
            if "-" in tok[1:]:
                a, b = tok.split("-", 1)
                out.update(range(int(a), int(b) + 1))
            else:
                out.add(int(tok))
        except ValueError:
            raise UsageError(f"bad set element {tok!r}") from None
    bad = [i for i in out if not 0 <= i < space.n]
    if bad:
        raise UsageError(f"set index {bad[0]} out of range 0..{space.n - 1}")
    return sorted(out)


def parse_kv(text):
    out = {}
    for tok in filter(None, (t.strip() for t in (text or "").split(","))):
        if "=" not in tok:
            raise UsageError(f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_vector(text, n):
    try:
        v = np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise UsageError(f"bad vector {text!r}") from None
    if v.size == 1:
        v = np.full(n, v[0])
    if v.size != n:
        raise UsageError(f"vector has length {v.size}, expected {n}")
    return v


def params_from(args):
    try:
        return RieszParams(args.gamma, args.p)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def emit(doc, out):
    text = json.dumps(doc, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

GEN_KINDS = ("grid", "cantor", "wline", "snowflake", "twopoint", "equilateral", "random")


def cmd_gen(args):
    kv = parse_kv(args.params)
    try:
        if args.kind == "grid":
            sp = sg.grid(int(kv.get("dim", 1)), int(kv.get("side", 4)), float(kv.get("spacing", 1.0)))
        elif args.kind == "cantor":
            sp = sg.cantor_dust(int(kv.get("depth", 3)))
        elif args.kind == "wline":
            sp = sg.weighted_line(int(kv.get("n", 16)), float(kv.get("alpha", 1.0)))
        elif args.kind == "snowflake":
            if not args.base:
                raise UsageError("snowflake needs --base space.json")
            sp = sg.snowflake(sg.load_space(args.base), float(kv.get("epsilon", 0.5)))
        elif args.kind == "twopoint":
            sp = sg.two_point(float(kv.get("d", 1.0)))
        elif args.kind == "equilateral":
            sp = sg.equilateral(int(kv.get("n", 3)))
        else:
            rng = np.random.default_rng(int(kv.get("seed", 0)))
            dim = int(kv["dim"]) if "dim" in kv else None
            sp = sg.random_cloud(rng, int(kv.get("n", 16)), dim)
    except KeyError as exc:
        raise UsageError(f"missing parameter {exc}") from None
    if args.out:
        sg.save_space(sp, args.out)
    else:
        json.dump(sg.space_to_dict(sp), sys.stdout)
        sys.stdout.write("\n")
    return 0


def cmd_profile(args):
    sp = sg.load_space(args.space)
    prof = doubling_profile(sp, s_step=args.s_step, c_upper_cap=args.cap)
    if args.csv:
        profile_csv(prof, args.csv)
    emit({"c_d": prof.c_d, "Q": prof.Q, "C_lower": prof.C_lower, "s": prof.s, "C_upper": prof.C_upper,
          "witness_pairs": [list(w) for w in prof.witness_pairs]}, args.out)
    return 0


def cmd_potential(args):
    sp = sg.load_space(args.space)
    params = RieszParams(args.gamma, args.p)
    kernel = assemble_kernel(sp, params, DiagonalMode(args.diag), kind=args.kernel)
    if args.dump_kernel:
        kernel_csv(kernel, args.dump_kernel)
    v = parse_vector(args.f, sp.n)
    if args.measure:
        vals = adjoint_potential_of_measure(kernel, v) if args.adjoint else potential_of_measure(kernel, v)
    else:
        vals = potential(kernel, v)
    emit({"potential": [float(x) for x in vals]}, args.out)
    return 0


def cmd_capacity(args):
    sp = sg.load_space(args.space)
    params = params_from(args)
    E = parse_set(args.set, sp)
    kernel = assemble_kernel(sp, params, DiagonalMode(args.diag))
    t0 = time.perf_counter()
    res = capacity(kernel, E, args.tol, args.max_iter)
    doc = res.to_dict()
    doc.update({"set": E, "gamma": params.gamma, "p": params.p, "seconds": time.perf_counter() - t0})
    emit(doc, args.out)
    return 0 if res.converged else 1


def cmd_content(args):
    sp = sg.load_space(args.space)
    params = params_from(args)
    if not params.gp < 1:
        raise UsageError(f"content needs gamma * p < 1, got {params.gp}")
    E = parse_set(args.set, sp)
    rcap = float(args.rcap)
    try:
        sol = modified_content(sp, params, E, r_cap=rcap, mode=args.mode, node_cap=args.node_cap)
    except SearchLimitExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    emit({"total_weight": sol.total_weight, "exact": sol.exact, "nodes": sol.nodes,
          "cover": [[b.center, b.rho, b.weight] for b in sol.balls]}, args.out)
    return 0


def cmd_verify(args):
    sp = sg.load_space(args.space)
    params = params_from(args)
    reports = run_suite(sp, params, args.suite, args.seed, args.tol, args.instances, args.jobs)
    if args.out:
        reports_csv(reports, args.out)
    failed = [r for r in reports if not r.passed]
    print(f"{len(reports)} checks, {len(failed)} failed", file=sys.stderr)
    for r in failed:
        print(f"FAIL {r.check_name} {r.instance_id}: {r.lhs!r} > {r.rhs!r}", file=sys.stderr)
    return 1 if failed else 0


def parse_grid(text):
    out = []
    for tok in filter(None, (t.strip() for t in text.split(","))):
        try:
            g, p = tok.split(":")
            out.append((float(g), float(p)))
        except ValueError:
            raise UsageError(f"bad grid entry {tok!r}; expected gamma:p") from None
    return out


def cmd_report(args):
    import csv

    sp = sg.load_space(args.space)
    if args.kind == "balls":
        params = params_from(args)
        if not params.gp < 1:
            raise UsageError(f"ball report needs gamma * p < 1, got {params.gp}")
        rows = [vars(r) for r in capacity_of_balls_report(sp, params, tolerance=args.tol)]
        ok = all(r["passed"] for r in rows)
    else:
        E = parse_set(args.set or "all", sp)
        grid = parse_grid(args.grid)
        for g, p in grid:
            if not RieszParams(g, p).gp < 1:
                raise UsageError(f"grid entry {g}:{p} has gamma * p >= 1")
        rows = dimension_profile(sp, E, grid, args.tol)
        ok = True
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        if rows:
            w.writerow(list(rows[0]))
            for r in rows:
                w.writerow([repr(v) if isinstance(v, float) else v for v in r.values()])
    finally:
        if args.out:
            fh.close()
    return 0 if ok else 1


# ---------------------------------------------------------------- batch

def read_config(path):
    """``key = value`` lines; ``#`` starts a comment."""
    cfg = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            k, v = line.split("=", 1)
            cfg[k.strip()] = v.strip()
    return cfg


def _floats(text):
    return [float(t) for t in text.split(",") if t.strip()]


def cmd_batch(args):
    cfg = read_config(args.config)
    known = {"space", "gamma", "p", "sets", "suites", "seed", "tolerance", "instances", "max_iter"}
    unknown = set(cfg) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "space" not in cfg:
        raise UsageError("config needs a 'space' entry")
    space_path = cfg["space"]
    if not os.path.isabs(space_path):
        space_path = os.path.join(os.path.dirname(os.path.abspath(args.config)), space_path)
    sp = sg.load_space(space_path)
    gammas = _floats(cfg.get("gamma", "0.3"))
    ps = _floats(cfg.get("p", "2"))
    sets = [parse_set(s, sp) for s in cfg.get("sets", "all").split(";") if s.strip()]
    suites = [s.strip() for s in cfg.get("suites", "").split(",") if s.strip()]
    for s in suites:
        if s not in SUITES and s != "all":
            raise UsageError(f"unknown suite {s!r}")
    seed = int(cfg.get("seed", 0))
    tol = float(cfg.get("tolerance", DEFAULT_TOL))
    instances = int(cfg.get("instances", 3))
    max_iter = int(cfg.get("max_iter", DEFAULT_MAX_ITER))
    combos = []
    for g in gammas:
        for p in ps:
            try:
                combos.append(RieszParams(g, p))
            except ValueError as exc:
                raise UsageError(str(exc)) from None

    def job(params):
        kernel = assemble_kernel(sp, params)
        caps = []
        for E in sets:
            r = capacity(kernel, E, tol, max_iter)
            caps.append({"set": E, "primal_value": r.primal_value, "dual_value": r.dual_value,
                         "rel_gap": r.rel_gap, "converged": r.converged, "iterations": r.iterations})
        reports = []
        for s in suites:
            if s == "content" and not params.gp < 1:
                continue
            reports.extend(run_suite(sp, params, s, seed, tol, instances))
        return {"gamma": params.gamma, "p": params.p, "capacities": caps}, reports

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(job, combos))
    os.makedirs(args.out, exist_ok=True)
    all_reports = []
    for (res, reps), params in zip(results, combos):
        for r in reps:
            r.instance_id = f"g={params.gamma!r},p={params.p!r}:{r.instance_id}"
        all_reports.extend(reps)
    all_reports.sort(key=lambda r: (r.check_name, r.instance_id))
    reports_csv(all_reports, os.path.join(args.out, "report.csv"))
    with open(os.path.join(args.out, "results.json"), "w") as fh:
        json.dump([r for r, _ in results], fh, indent=2)
        fh.write("\n")
    meta = {"version": __version__, "backend": _core.BACKEND, "python": platform.python_version(),
            "numpy": np.__version__, "seed": seed, "tolerance": tol, "instances": instances,
            "max_iter": max_iter, "config": os.path.abspath(args.config),
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z")}
    with open(os.path.join(args.out, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    failed = sum(not r.passed for r in all_reports)
    unconverged = sum(not c["converged"] for r, _ in results for c in r["capacities"])
    print(f"{len(all_reports)} checks, {failed} failed, {unconverged} unconverged solves", file=sys.stderr)
    return 1 if failed or unconverged else 0


# ---------------------------------------------------------------- entry point

def build_parser():
    ap = argparse.ArgumentParser(prog="rieszcap", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def riesz(p, gp_default=0.3, p_default=2.0):
        p.add_argument("--gamma", type=float, default=gp_default)
        p.add_argument("--p", type=float, default=p_default)

    g = sub.add_parser("gen", help="generate a reference space")
    g.add_argument("--kind", choices=GEN_KINDS, required=True)
    g.add_argument("--params", default="", help="comma-separated key=value, e.g. dim=2,side=8,spacing=1")
    g.add_argument("--base", help="input space for --kind snowflake")
    g.add_argument("--out")
    g.set_defaults(fn=cmd_gen)

    g = sub.add_parser("profile", help="doubling and reverse-doubling constants")
    g.add_argument("--space", required=True)
    g.add_argument("--s-step", type=float, default=0.01)
    g.add_argument("--cap", type=float, default=100.0, help="upper limit for the reverse-doubling constant")
    g.add_argument("--csv", help="write center,radius,ratio rows")
    g.add_argument("--out")
    g.set_defaults(fn=cmd_profile)

    g = sub.add_parser("potential", help="Riesz potential of a function or measure")
    g.add_argument("--space", required=True)
    riesz(g)
    g.add_argument("--f", required=True, help="comma-separated values, or one value for a constant")
    g.add_argument("--measure", action="store_true", help="treat the input as a measure (no mass weight)")
    g.add_argument("--adjoint", action="store_true", help="with --measure, apply the kernel in its first argument")
    g.add_argument("--kernel", choices=("riesz", "tilde"), default="riesz")
    g.add_argument("--diag", choices=[m.value for m in DiagonalMode], default="zero")
    g.add_argument("--dump-kernel", help="write the kernel as i,j,K rows")
    g.add_argument("--out")
    g.set_defaults(fn=cmd_potential)

    g = sub.add_parser("capacity", help="certified capacity of a set")
    g.add_argument("--space", required=True)
    g.add_argument("--set", required=True)
    riesz(g)
    g.add_argument("--tol", type=float, default=DEFAULT_TOL)
    g.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    g.add_argument("--diag", choices=[m.value for m in DiagonalMode], default="zero")
    g.add_argument("--out")
    g.set_defaults(fn=cmd_capacity)

    g = sub.add_parser("content", help="modified Hausdorff content by set cover")
    g.add_argument("--space", required=True)
    g.add_argument("--set", required=True)
    riesz(g)
    g.add_argument("--rcap", default="inf")
    g.add_argument("--mode", choices=("greedy", "exact"), default="greedy")
    g.add_argument("--node-cap", type=int, default=2 ** 20)
    g.add_argument("--out")
    g.set_defaults(fn=cmd_content)

    g = sub.add_parser("verify", help="run a theorem-check suite")
    g.add_argument("--space", required=True)
    g.add_argument("--suite", choices=("all",) + SUITES, default="all")
    riesz(g)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--tol", type=float, default=DEFAULT_TOL)
    g.add_argument("--instances", type=int, default=5)
    g.add_argument("--jobs", type=int, default=1)
    g.add_argument("--out", help="CSV report")
    g.set_defaults(fn=cmd_verify)

    g = sub.add_parser("report", help="ball-capacity or dimension tables as CSV")
    g.add_argument("--space", required=True)
    g.add_argument("--kind", choices=("balls", "dimension"), default="balls")
    riesz(g)
    g.add_argument("--set", help="target set for --kind dimension (default all)")
    g.add_argument("--grid", default="0.1:2,0.2:2,0.3:2,0.4:2", help="gamma:p pairs")
    g.add_argument("--tol", type=float, default=DEFAULT_TOL)
    g.add_argument("--out")
    g.set_defaults(fn=cmd_report)

    g = sub.add_parser("batch", help="run a key = value config into a report directory")
    g.add_argument("--config", required=True)
    g.add_argument("--out", required=True, help="report directory")
    g.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    g.set_defaults(fn=cmd_batch)
    return ap


def run(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (UsageError, SpaceError, ValueError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
