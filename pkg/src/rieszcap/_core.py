"""Backend selection for the hot kernels.

The compiled extension is used when it imports; ``RIESZCAP_PURE=1`` forces the
pure-Python fallback.  Cover routines fall back per call when the universe has
more than 64 elements (the compiled path packs masks into uint64).
"""

import os

from . import _pycore

try:
    if os.environ.get("RIESZCAP_PURE", "") not in ("", "0"):
        raise ImportError("pure backend requested")
    from . import _ccore as _impl
except ImportError:
    _impl = _pycore

BACKEND = _impl.BACKEND
MASK_BITS = 64


def ball_mass_tables(dist, mass):
    return _impl.ball_mass_tables(dist, mass)


def triangle_violation(dist, rtol=1e-12):
    return _impl.triangle_violation(dist, rtol)


def five_r_select(dist, radii, order):
    return _impl.five_r_select(dist, radii, order)


def _pick(universe):
    return _impl if universe < (1 << MASK_BITS) else _pycore


def greedy_cover(masks, weights, universe):
    impl = _pick(universe)
    return impl.greedy_cover(_as_masks(masks, impl), weights, universe)


def bnb_cover(masks, weights, universe, node_cap):
    impl = _pick(universe)
    return impl.bnb_cover(_as_masks(masks, impl), weights, universe, node_cap)


def _as_masks(masks, impl):
    if impl is _pycore:
        return [int(m) for m in masks]
    import numpy as np

    return np.array([int(m) for m in masks], dtype=np.uint64)
