"""Reference spaces and JSON ingestion.

JSON layout::

    {"points": [[...], ...] | null, "dist": [[...], ...] | null,
     "mass": [...], "metric": "euclidean" | "explicit" | "snowflake",
     "epsilon": 0.5, "labels": [...]}

Exactly one of ``points`` (with a point metric) or ``dist`` is given.
``snowflake`` raises the Euclidean distance between ``points`` to ``epsilon``.
"""

import itertools
import json
import math

import numpy as np

from .mmspace import MetricMeasureSpace, SpaceError

SIZE_CAP = 10_000
CANTOR_MAX_DEPTH = 10


class SpaceFormatError(SpaceError):
    pass


def euclidean_distances(points):
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def from_points(points, mass, labels=None, **kw):
    return MetricMeasureSpace(euclidean_distances(points), mass, labels, **kw)


def grid(dim, side, spacing=1.0):
    """Lattice ``{0, .., side-1}^dim * spacing`` with Lebesgue cell masses ``spacing**dim``."""
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    if side < 2:
        raise ValueError(f"side must be >= 2, got {side}")
    n = side ** dim
    if n > SIZE_CAP:
        raise ValueError(f"grid has {n} points, cap is {SIZE_CAP}")
    idx = np.array(list(itertools.product(range(side), repeat=dim)), dtype=np.float64)
    # integer offsets first so equal offsets give bit-identical distances
    dist = euclidean_distances(idx) * spacing
    return MetricMeasureSpace(dist, np.full(n, float(spacing) ** dim))


def cantor_dust(depth):
    """Left endpoints of the depth-``depth`` middle-thirds intervals, uniform mass ``2**-depth``."""
    if not 1 <= depth <= CANTOR_MAX_DEPTH:
        raise ValueError(f"depth must be in 1..{CANTOR_MAX_DEPTH}, got {depth}")
    ticks = np.zeros(1, dtype=np.int64)
    for level in range(depth):
        ticks = np.concatenate((ticks, ticks + 2 * 3 ** (depth - 1 - level)))
    ticks.sort()
    dist = np.abs(ticks[:, None] - ticks[None, :]).astype(np.float64) / 3.0 ** depth
    return MetricMeasureSpace(dist, np.full(ticks.size, 2.0 ** -depth))


def weighted_line(n, alpha):
    """Points ``k/n`` (``k = 0..n-1``) with masses proportional to ``(k/n)**alpha / n``.

    The origin cell gets the average of ``x**alpha`` over ``[0, 1/n]`` so every
    mass stays positive; masses are normalized to total 1.
    """
    if alpha <= -1:
        raise ValueError(f"alpha must be > -1, got {alpha}")
    if not 2 <= n <= SIZE_CAP:
        raise ValueError(f"n must be in 2..{SIZE_CAP}, got {n}")
    k = np.arange(n, dtype=np.float64)
    w = (k / n) ** alpha / n
    w[0] = (1.0 / n) ** alpha / (alpha + 1) / n
    dist = np.abs(k[:, None] - k[None, :]) * (1.0 / n)
    return MetricMeasureSpace(dist, w / w.sum())


def snowflake(base, epsilon):
    """``d**epsilon`` on the same points and masses; balls are unchanged up to relabeling radii."""
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    return MetricMeasureSpace(base.dist ** epsilon, base.mass, base.labels)


def two_point(d=1.0, masses=(1.0, 1.0)):
    return MetricMeasureSpace([[0.0, d], [d, 0.0]], masses, ["a", "b"])


def equilateral(n=3, mass=1.0):
    return MetricMeasureSpace(1.0 - np.eye(n), np.full(n, mass))


def random_cloud(rng, n, dim=None, mass_range=(0.1, 10.0)):
    """Uniform cloud in the unit cube with masses uniform in ``mass_range``."""
    if dim is None:
        dim = int(rng.integers(1, 4))
    X = rng.random((n, dim))
    return from_points(X, rng.uniform(*mass_range, size=n))


# ---------------------------------------------------------------- JSON

def _field(doc, name, required=True):
    if name not in doc or doc[name] is None:
        if required:
            raise SpaceFormatError(f"field '{name}' is required")
        return None
    return doc[name]


def space_from_dict(doc):
    if not isinstance(doc, dict):
        raise SpaceFormatError("top level must be an object")
    mass = _field(doc, "mass")
    points = _field(doc, "points", required=False)
    dist = _field(doc, "dist", required=False)
    metric = doc.get("metric") or ("explicit" if dist is not None else "euclidean")
    labels = doc.get("labels")
    if (points is None) == (dist is None):
        raise SpaceFormatError("exactly one of 'points' or 'dist' must be present")
    if not isinstance(mass, list):
        raise SpaceFormatError("field 'mass' must be a list")
    for i, m in enumerate(mass):
        if not isinstance(m, (int, float)) or isinstance(m, bool):
            raise SpaceFormatError(f"field 'mass[{i}]' must be a number, got {m!r}")
        if not m > 0 or not math.isfinite(m):
            raise SpaceFormatError(f"field 'mass[{i}]' = {m!r} must be finite and > 0")
    if dist is not None:
        if metric != "explicit":
            raise SpaceFormatError(f"field 'metric' must be 'explicit' with 'dist', got {metric!r}")
        if not isinstance(dist, list) or any(not isinstance(r, list) for r in dist):
            raise SpaceFormatError("field 'dist' must be a list of rows")
        for i, r in enumerate(dist):
            if len(r) != len(dist):
                raise SpaceFormatError(f"field 'dist[{i}]' has length {len(r)}, expected {len(dist)}")
        D = np.asarray(dist, dtype=np.float64)
    else:
        if metric not in ("euclidean", "snowflake"):
            raise SpaceFormatError(f"field 'metric' = {metric!r} is not a point metric")
        try:
            X = np.asarray(points, dtype=np.float64)
        except (TypeError, ValueError):
            raise SpaceFormatError("field 'points' must be a rectangular list of coordinates")
        D = euclidean_distances(X)
        if metric == "snowflake":
            eps = doc.get("epsilon")
            if not isinstance(eps, (int, float)) or not 0 < eps <= 1:
                raise SpaceFormatError(f"field 'epsilon' must lie in (0, 1], got {eps!r}")
            D = D ** eps
    if len(mass) != D.shape[0]:
        raise SpaceFormatError(f"field 'mass' has length {len(mass)}, expected {D.shape[0]}")
    try:
        return MetricMeasureSpace(D, mass, labels)
    except SpaceError as exc:
        raise SpaceFormatError(str(exc)) from None


def space_to_dict(space):
    doc = {
        "points": None,
        "dist": [[float(v) for v in row] for row in space.dist],
        "mass": [float(v) for v in space.mass],
        "metric": "explicit",
    }
    if space.labels is not None:
        doc["labels"] = list(space.labels)
    return doc


def load_space(path):
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpaceFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        return space_from_dict(doc)
    except SpaceFormatError as exc:
        raise SpaceFormatError(f"{path}: {exc}") from None


def save_space(space, path):
    with open(path, "w") as fh:
        json.dump(space_to_dict(space), fh)
        fh.write("\n")
