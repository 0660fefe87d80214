"""Machine-checkable versions of the capacity inequalities.

Every check produces :class:`CheckReport` rows of the form ``lhs <= rhs``
with ``passed = lhs <= rhs * (1 + tol) + tol``.  The side that a heuristic
over-estimates is always put on the right (greedy content, summed upper
bounds) or compared against certified lower bounds, so a failed row
falsifies the implementation rather than the heuristic.
"""

import csv
import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .capacity import DEFAULT_TOL, CapacityOracle, capacity
from .hausdorff import SearchLimitExceeded, five_r_cover, modified_content
from .kernel import RieszParams, assemble_kernel, lp_norm, potential
from .mmspace import ball_mass, doubling_profile

EXACT_CONTENT_MAX_N = 20


@dataclass
class CheckReport:
    check_name: str
    instance_id: str
    lhs: float
    rhs: float
    constant_used: float
    passed: bool = field(init=False)
    slack: float = field(init=False)
    tolerance: float = 0.0
    note: str = ""

    def __post_init__(self):
        self.lhs = float(self.lhs)
        self.rhs = float(self.rhs)
        self.passed = bool(self.lhs <= self.rhs * (1 + self.tolerance) + self.tolerance)
        self.slack = self.rhs - self.lhs

    def to_dict(self):
        return dataclasses.asdict(self)


CSV_FIELDS = [f.name for f in dataclasses.fields(CheckReport)]


def reports_csv(reports, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for r in reports:
            w.writerow([repr(v) if isinstance(v, float) else v for v in (getattr(r, k) for k in CSV_FIELDS)])


def _set(E):
    return sorted(set(int(e) for e in E))


def _oracle(kernel, oracle, tolerance):
    return oracle if oracle is not None else CapacityOracle(kernel, tolerance)


def _content(space, params, E, exact_max_n=EXACT_CONTENT_MAX_N):
    """Exact content for small spaces, greedy otherwise or when the search is refused.

    Greedy over-estimates, so using it on the large side only strengthens a check.
    """
    if space.n <= exact_max_n:
        try:
            return modified_content(space, params, E, mode="exact").total_weight, "exact"
        except SearchLimitExceeded:
            pass
    return modified_content(space, params, E, mode="greedy").total_weight, "greedy"


# ---------------------------------------------------------------- content side

def check_capacity_le_content(space, params, E, profile=None, kernel=None, tolerance=DEFAULT_TOL,
                              instance_id="", oracle=None, exact_max_n=EXACT_CONTENT_MAX_N):
    """``C(E) <= C * content(E)`` with the ball-capacity constant."""
    params.require_subcritical()
    E = _set(E)
    if not E:
        return CheckReport("capacity_le_content", instance_id, 0.0, 0.0, 0.0, 2 * tolerance, "vacuous")
    if profile is None:
        profile = doubling_profile(space)
    if kernel is None:
        kernel = assemble_kernel(space, params)
    const = profile.ball_constant(params.gamma, params.p)
    lhs = _oracle(kernel, oracle, tolerance).upper(E)
    content, how = _content(space, params, E, exact_max_n)
    return CheckReport("capacity_le_content", instance_id, lhs, const * content, const,
                       2 * tolerance, f"content={how}")


@dataclass
class ContentBound:
    """Itemized output of :func:`content_bound_from_admissible`."""

    bound: float
    ok: bool
    x0: int
    R0: float
    R: float
    delta: float
    a_eff: float
    C_H: float
    C_up_profile: float
    C_up_used: float
    M: float
    kappa: float
    C2: float
    dilation_factor: float
    f_norm_p: float
    points: list
    failures: list
    selected: list
    cover_weight: float
    content: float = math.nan
    content_mode: str = ""

    @property
    def dominates(self):
        return bool(self.ok and self.content <= self.bound * (1 + 1e-9))

    def to_dict(self):
        return dataclasses.asdict(self)


def _medoid(space, E):
    E = np.asarray(E)
    cost = space.dist[np.ix_(E, E)] @ space.mass[E]
    return int(E[int(np.argmin(cost))])


def _choose_R0(space, kernel, f, E, x0, If):
    """Smallest radius with ``E`` inside ``B(x0, R0)`` carrying half of every ``I f(x)``."""
    row = space.dist[x0]
    far = row[E].max()
    cands = [float(d) for d in np.unique(row) if d > far]
    cands.append(2.0 * float(row.max()) if row.max() > 0 else 1.0)
    wf = f * space.mass
    for R0 in cands:
        inside = row < R0
        part = kernel.K[np.ix_(E, np.flatnonzero(inside))] @ wf[inside]
        if np.all(part >= 0.5 * If[E]):
            return R0
    return cands[-1]


def content_bound_from_admissible(space, params, params2, E, f, profile=None, kernel=None,
                                  admissibility_tol=1e-9, content=True,
                                  exact_max_n=EXACT_CONTENT_MAX_N):
    """Constructive bound on the ``(gamma2, p2)`` content of ``E`` from an admissible ``f``.

    With ``R = 2 R0`` and dyadic radii ``r_i = 2^-i R``, each ``x`` in ``E``
    gets the first index ``i`` whose ball ``B_i = B(x, r_i)`` satisfies
    ``mu(B_i)^(1 - gamma2 p2) <= C2 int_{B_i} f^p``; a 5r subcover of these
    balls then gives content ``<= c_d^{3(1 - gamma2 p2)} C2 ||f||_p^p``.

    ``C2 = kappa^-p`` with ``kappa = a (1 - 2^-delta) / (C_H (C_up M)^(delta/s))``,
    ``delta = s (gamma p - gamma2 p2) / p``, ``C_H = 2 c_d^(1 - gamma)``,
    ``M = mu(B(x0, R))`` and ``a = min(1, min_E I f)``.  ``C_up`` is the
    profiled reverse-doubling constant raised, if needed, to cover the exact
    pairs ``(x, r_i)`` against ``(x0, R)`` used here.  With these constants
    an index exists for every ``x``; a point without one is reported in
    ``failures``.
    """
    params.require_subcritical()
    params2.require_subcritical()
    if not params2.gp < params.gp:
        raise ValueError(f"need gamma2 p2 < gamma p, got {params2.gp} >= {params.gp}")
    E = _set(E)
    if not E:
        raise ValueError("target set E must be nonempty")
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (space.n,) or np.any(f < 0):
        raise ValueError("f must be a nonnegative vector of length n")
    if profile is None:
        profile = doubling_profile(space)
    if kernel is None:
        kernel = assemble_kernel(space, params)
    If = potential(kernel, f)
    a = float(If[E].min())
    if a < 1 - admissibility_tol:
        raise ValueError(f"f is not admissible: min over E of I f = {a!r} < 1")
    a_eff = min(1.0, a)

    p, g = params.p, params.gamma
    s = profile.s
    c_d = profile.c_d
    x0 = _medoid(space, E)
    R0 = _choose_R0(space, kernel, f, E, x0, If)
    R = 2.0 * R0
    M = ball_mass(space, x0, R)
    delta = s * (params.gp - params2.gp) / p
    C_H = 2.0 * c_d ** (1 - g)
    fp = f ** p * space.mass

    # dyadic indices per point: stop once B(x, r_{i+1}) = {x}
    shells = {}
    C_inst = 0.0
    for x in E:
        dmin = space.dist[x][space.dist[x] > 0].min()
        radii = []
        r = R
        while True:
            radii.append(r)
            if r / 2 <= dmin:
                break
            r /= 2
        shells[x] = radii
        for r in radii:
            C_inst = max(C_inst, ball_mass(space, x, r) / M / (r / R) ** s)
    C_up = max(profile.C_upper, C_inst)
    kappa = a_eff * (1 - 2.0 ** -delta) / (C_H * (C_up * M) ** (delta / s))
    C2 = kappa ** -p
    expo = 1.0 - params2.gp

    points, failures, assignment = [], [], {}
    for x in E:
        row = space.dist[x]
        found = None
        for i, r in enumerate(shells[x]):
            inside = row < r
            mB = float(space.mass[inside].sum())
            J = float(fp[inside].sum())
            if mB ** expo <= C2 * J * (1 + 1e-12):
                found = (i, r, mB, J)
                break
        if found is None:
            failures.append(int(x))
            continue
        i, r, mB, J = found
        points.append({"x": int(x), "index": i, "radius": r, "ball_mass": mB, "f_mass": J,
                       "lhs": mB ** expo, "rhs": C2 * J})
        assignment[int(x)] = r

    dilation = c_d ** (3 * expo)
    norm_p = float(fp.sum())
    bound = dilation * C2 * norm_p
    selected, cover_weight = [], math.nan
    if not failures:
        selected = five_r_cover(space, assignment)
        cover_weight = float(sum(ball_mass(space, x, 5 * r) ** expo for x, r in selected))
    out = ContentBound(bound=float(bound), ok=not failures, x0=x0, R0=float(R0), R=float(R),
                       delta=float(delta), a_eff=a_eff, C_H=float(C_H), C_up_profile=float(profile.C_upper),
                       C_up_used=float(C_up), M=float(M), kappa=float(kappa), C2=float(C2),
                       dilation_factor=float(dilation), f_norm_p=norm_p, points=points,
                       failures=failures, selected=selected, cover_weight=cover_weight)
    if content:
        out.content, out.content_mode = _content(space, params2, E, exact_max_n)
    return out


# ---------------------------------------------------------------- capacity side

def check_weak_type(space, params, f, thresholds=None, kernel=None, tolerance=DEFAULT_TOL,
                    instance_id="", oracle=None):
    """``C({I f > a}) <= a^-p ||f||_p^p`` per threshold (default: every value of ``I f``)."""
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise ValueError("f must be nonnegative")
    if kernel is None:
        kernel = assemble_kernel(space, params)
    oracle = _oracle(kernel, oracle, tolerance)
    If = potential(kernel, f)
    if thresholds is None:
        thresholds = np.unique(If[If > 0])
    norm_p = lp_norm(space, f, params.p) ** params.p
    reports = []
    for a in thresholds:
        a = float(a)
        if not a > 0:
            raise ValueError(f"thresholds must be positive, got {a}")
        level = np.flatnonzero(If > a)
        lhs = oracle.upper(level)
        reports.append(CheckReport("weak_type", f"{instance_id}a={a!r}", lhs, a ** -params.p * norm_p,
                                   a ** -params.p, 2 * tolerance, f"|level|={level.size}"))
    return reports


def check_axioms(space, params, family, kernel=None, tolerance=DEFAULT_TOL, instance_id="",
                 oracle=None):
    """Outer-measure axioms, Fatou chains and the liminf inequality on a finite family.

    Left sides use certified upper bounds and right sides certified lower
    bounds, so each row holds up to twice the solver tolerance.  Chains are
    the cumulative unions (increasing) and intersections (decreasing) of the
    family; the limit rows compare the final chain member with a fresh solve
    of the limit set from a different initialization.  The liminf of the
    family repeated periodically is its intersection and the liminf of the
    capacities is their minimum.
    """
    if kernel is None:
        kernel = assemble_kernel(space, params)
    oracle = _oracle(kernel, oracle, tolerance)
    fam = [_set(A) for A in family]
    tol2 = 2 * tolerance
    iid = instance_id
    up, lo = oracle.upper, oracle.lower
    out = [CheckReport("empty", iid, up([]), 0.0, 1.0, tol2)]

    def fresh(A):
        if not A:
            return 0.0, 0.0
        r = capacity(kernel, A, tolerance, init="degree")
        return r.primal_value, r.dual_value

    for i, A in enumerate(fam):
        for j, B in enumerate(fam):
            if i != j and set(A) < set(B):
                out.append(CheckReport("monotone", f"{iid}{i}<{j}", up(A), lo(B), 1.0, tol2))
    for i in range(len(fam)):
        for j in range(i + 1, len(fam)):
            U = _set(fam[i] + fam[j])
            out.append(CheckReport("subadditive", f"{iid}{i}+{j}", up(U),
                                   lo(fam[i]) + lo(fam[j]), 1.0, tol2))
    if fam:
        U = _set(x for A in fam for x in A)
        out.append(CheckReport("subadditive", f"{iid}all", up(U), sum(lo(A) for A in fam), 1.0,
                               len(fam) * tolerance + tolerance))

        inc, acc = [], set()
        for A in fam:
            acc |= set(A)
            inc.append(sorted(acc))
        for k in range(len(inc) - 1):
            out.append(CheckReport("fatou_increasing", f"{iid}{k}", up(inc[k]), lo(inc[k + 1]), 1.0, tol2))
        fp_, fl = fresh(inc[-1])
        out.append(CheckReport("fatou_limit", f"{iid}le", up(inc[-1]), fl, 1.0, tol2))
        out.append(CheckReport("fatou_limit", f"{iid}ge", fp_, lo(inc[-1]), 1.0, tol2))

        dec, acc = [], set(fam[0])
        for A in fam:
            acc &= set(A)
            dec.append(sorted(acc))
        for k in range(len(dec) - 1):
            out.append(CheckReport("decreasing", f"{iid}{k}", up(dec[k + 1]), lo(dec[k]), 1.0, tol2))
        dp, dl = fresh(dec[-1])
        out.append(CheckReport("decreasing_limit", f"{iid}le", up(dec[-1]), dl, 1.0, tol2))
        out.append(CheckReport("decreasing_limit", f"{iid}ge", dp, lo(dec[-1]), 1.0, tol2))

        out.append(CheckReport("liminf", iid, up(dec[-1]), min(lo(A) for A in fam), 1.0, tol2))
    return out


def check_convergence(space, params, f, perturbations, eps=None, kernel=None, tolerance=DEFAULT_TOL,
                      instance_id="", oracle=None):
    """``C({|I f_i - I f| > eps}) <= eps^-p ||f_i - f||_p^p`` for ``f_i = f + e_i``.

    ``I f_i - I f`` is computed as ``I e_i`` by linearity, signed ``e_i``
    included.  ``eps`` is a list applied to every ``i``; by default each ``i``
    uses ``eps_i = ||e_i||_p^(1/2)`` (or 1 when ``e_i = 0``), so the right
    side ``||e_i||_p^(p/2)`` tends to 0 with ``e_i``.
    """
    if kernel is None:
        kernel = assemble_kernel(space, params)
    oracle = _oracle(kernel, oracle, tolerance)
    p = params.p
    out = []
    for i, e in enumerate(perturbations):
        e = np.asarray(e, dtype=np.float64)
        diff = np.abs(potential(kernel, e))
        norm = lp_norm(space, e, p)
        levels = eps if eps is not None else [math.sqrt(norm) if norm > 0 else 1.0]
        for ep in levels:
            level = np.flatnonzero(diff > ep)
            out.append(CheckReport("convergence", f"{instance_id}i={i},eps={float(ep)!r}",
                                   oracle.upper(level), ep ** -p * norm ** p, ep ** -p, 2 * tolerance,
                                   f"|level|={level.size}"))
    return out


def check_duality(space, params, family, kernel=None, tolerance=DEFAULT_TOL, instance_id="",
                  oracle=None):
    """Per set: the dual bound stays below the primal value and the relative gap is within ``tolerance``."""
    if kernel is None:
        kernel = assemble_kernel(space, params)
    oracle = _oracle(kernel, oracle, tolerance)
    out = []
    for k, A in enumerate(family):
        A = _set(A)
        if not A:
            continue
        r = oracle.result(A)
        note = "" if r.converged else "not converged"
        # weak duality is exact up to rounding; the absolute tolerance absorbs ulp ties
        out.append(CheckReport("duality_order", f"{instance_id}{k}", r.dual_value, r.primal_value, 1.0,
                               tolerance, note))
        out.append(CheckReport("duality_gap", f"{instance_id}{k}", r.rel_gap, tolerance, 1.0, 0.0, note))
    return out


# ---------------------------------------------------------------- suites

SUITES = ("axioms", "weaktype", "duality", "content")


def random_subset(rng, n, lo=1, hi=None):
    hi = n if hi is None else min(hi, n)
    k = int(rng.integers(lo, hi + 1))
    return sorted(int(x) for x in rng.choice(n, size=k, replace=False))


def _job_axioms(space, params, kernel, tolerance, rng, idx):
    fam = [random_subset(rng, space.n, 1, max(1, space.n // 2)) for _ in range(int(rng.integers(2, 5)))]
    return check_axioms(space, params, fam, kernel, tolerance, f"axioms[{idx}]:")


def _job_weaktype(space, params, kernel, tolerance, rng, idx):
    f = rng.random(space.n) * (rng.random(space.n) < 0.5)
    If = potential(kernel, f)
    a = [float(rng.uniform(0.1, 1.0) * If.max())] if If.max() > 0 else [1.0]
    return check_weak_type(space, params, f, a, kernel, tolerance, f"weaktype[{idx}]:")


def _job_duality(space, params, kernel, tolerance, rng, idx):
    return check_duality(space, params, [random_subset(rng, space.n)], kernel, tolerance, f"duality[{idx}]:")


def _job_content(space, params, kernel, tolerance, rng, idx, profile):
    E = random_subset(rng, space.n, 1, max(1, min(space.n, 8)))
    out = [check_capacity_le_content(space, params, E, profile, kernel, tolerance, f"content[{idx}]")]
    p2 = RieszParams(params.gamma - 0.1 / params.p, params.p) if params.gamma > 0.1 / params.p + 1e-9 else None
    if p2 is not None:
        res = capacity(kernel, E, tolerance)
        cb = content_bound_from_admissible(space, params, p2, E, res.primal_f, profile, kernel)
        out.append(CheckReport("content_bound", f"content[{idx}]", cb.content if cb.ok else math.inf,
                               cb.bound, cb.dilation_factor * cb.C2, 1e-9,
                               f"content={cb.content_mode}" if cb.ok else f"no dyadic ball for {cb.failures}"))
    return out


def run_suite(space, params, suite="all", seed=0, tolerance=DEFAULT_TOL, instances=5, jobs=1):
    """Run random instances of one suite (or all) and return reports sorted by ``(check_name, instance_id)``.

    Each instance draws from its own generator spawned from ``seed``, so the
    output does not depend on ``jobs``.
    """
    suites = SUITES if suite == "all" else (suite,)
    for s in suites:
        if s not in SUITES:
            raise ValueError(f"unknown suite {s!r}; choose from all, {', '.join(SUITES)}")
    kernel = assemble_kernel(space, params)
    profile = doubling_profile(space) if "content" in suites else None
    tasks = []
    seeds = np.random.SeedSequence(seed).spawn(len(suites) * instances)
    for si, s in enumerate(suites):
        for k in range(instances):
            rng = np.random.default_rng(seeds[si * instances + k])
            tasks.append((s, k, rng))

    def run(task):
        s, k, rng = task
        if s == "content":
            if not params.gp < 1:
                return [CheckReport("capacity_le_content", f"content[{k}]", 0.0, 0.0, 0.0, 0.0,
                                    "vacuous: gamma p >= 1")]
            return _job_content(space, params, kernel, tolerance, rng, k, profile)
        return {"axioms": _job_axioms, "weaktype": _job_weaktype,
                "duality": _job_duality}[s](space, params, kernel, tolerance, rng, k)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]
    reports = [r for chunk in results for r in chunk]
    reports.sort(key=lambda r: (r.check_name, r.instance_id))
    return reports
