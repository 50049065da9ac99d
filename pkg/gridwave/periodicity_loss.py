"""
Autocorrelation-based periodicity loss.

Both images are split into a 2x2 grid of quadrants. For every quadrant q,
channel c, lag D and axis a, the unbiased lagged autocorrelation

    A = sum_p (x[p] - mu) (x[p + D e_a] - mu) / (M * var)

is computed, with mu and var the mean and population variance of that
quadrant's channel plane and M the number of overlapping pairs. Planes
with var < 1e-12 score 0. The loss is the mean squared difference of the
prediction's and target's values over all (q, c, D, a), normalized by
1 / (2 Q C |K|). The target never receives gradient.

Axis "h" shifts along columns (horizontal), "v" along rows (vertical).
Odd extents split with the extra row/column going to the top/left block.
"""

from typing import List, Tuple, Union

import numpy as np

from . import config
from .errors import ConfigError, ImageTooSmall, LagOutOfRange, ShapeMismatch
from .models import Image, LagSpec

Pixels = Union[Image, np.ndarray]


def _pixels(x: Pixels) -> np.ndarray:
    arr = x.data if isinstance(x, Image) else np.asarray(x, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr


def _quadrant_slices(h: int, w: int, q: int) -> List[Tuple[slice, slice]]:
    if q == 1:
        return [(slice(0, h), slice(0, w))]
    if h < 2 or w < 2:
        raise ImageTooSmall(f"cannot split a {h}x{w} image into quadrants")
    top, left = (h + 1) // 2, (w + 1) // 2
    return [
        (slice(0, top), slice(0, left)),
        (slice(0, top), slice(left, w)),
        (slice(top, h), slice(0, left)),
        (slice(top, h), slice(left, w)),
    ]


def quadrant_partition(img: Image) -> List[Image]:
    """Top-left, top-right, bottom-left, bottom-right blocks"""
    return [Image(img.data[rows, cols]) for rows, cols in _quadrant_slices(img.height, img.width, 4)]


def _shifted_pair(plane: np.ndarray, axis: str, lag: int) -> Tuple[np.ndarray, np.ndarray]:
    if axis == "h":
        return plane[:, : plane.shape[1] - lag], plane[:, lag:]
    return plane[: plane.shape[0] - lag, :], plane[lag:, :]


def _extent(plane: np.ndarray, axis: str) -> int:
    return plane.shape[1] if axis == "h" else plane.shape[0]


def _plane_autocorrelation(plane: np.ndarray, axis: str, lag: int) -> float:
    var = plane.var()
    if var < config.VARIANCE_FLOOR:
        return 0.0
    dev = plane - plane.mean()
    lead, trail = _shifted_pair(dev, axis, lag)
    return float(np.sum(lead * trail) / (lead.size * var))


def autocorrelation(block: Pixels, channel: int, axis: str, lag: int) -> float:
    """Unbiased lagged autocorrelation of one channel plane; lag 0 is accepted and gives 1"""
    arr = _pixels(block)
    if axis not in ("h", "v"):
        raise ConfigError(f"axis must be 'h' or 'v', got {axis!r}")
    plane = arr[:, :, channel]
    if not 0 <= lag < _extent(plane, axis):
        raise LagOutOfRange(f"lag {lag} outside [0, {_extent(plane, axis)}) along axis {axis}")
    return _plane_autocorrelation(plane, axis, lag)


def _blocks(arr: np.ndarray, spec: LagSpec) -> List[Tuple[slice, slice]]:
    slices = _quadrant_slices(arr.shape[0], arr.shape[1], spec.quadrants)
    smallest = min(min(r.stop - r.start, c.stop - c.start) for r, c in slices)
    if spec.lags[-1] >= smallest:
        raise LagOutOfRange(f"lag {spec.lags[-1]} must be smaller than the smallest block extent {smallest}")
    return slices


def autocorrelation_terms(img: Pixels, spec: LagSpec = LagSpec()) -> List[dict]:
    """Every (quadrant, channel, lag, axis) autocorrelation value, in loss order"""
    arr = _pixels(img)
    terms = []
    for q, (rows, cols) in enumerate(_blocks(arr, spec)):
        for c in range(arr.shape[2]):
            plane = arr[rows, cols, c]
            for lag in spec.lags:
                for axis in spec.axes:
                    terms.append({
                        "quadrant": q,
                        "channel": c,
                        "lag": lag,
                        "axis": axis,
                        "value": _plane_autocorrelation(plane, axis, lag),
                    })
    return terms


def _check_pair(pred: Pixels, gt: Pixels) -> Tuple[np.ndarray, np.ndarray]:
    p, g = _pixels(pred), _pixels(gt)
    if p.shape != g.shape:
        raise ShapeMismatch(f"prediction shape {p.shape} != target shape {g.shape}")
    return p, g


def _normalizer(arr: np.ndarray, spec: LagSpec) -> float:
    return float(len(spec.axes) * spec.quadrants * arr.shape[2] * len(spec.lags))


def l_ap(pred: Pixels, gt: Pixels, spec: LagSpec = LagSpec()) -> float:
    p, g = _check_pair(pred, gt)
    p_terms = autocorrelation_terms(p, spec)
    g_terms = autocorrelation_terms(g, spec)
    total = sum((a["value"] - b["value"]) ** 2 for a, b in zip(p_terms, g_terms))
    return total / _normalizer(p, spec)


def _plane_gradient(plane: np.ndarray, axis: str, lag: int) -> Tuple[float, np.ndarray]:
    """Autocorrelation of a plane and its exact derivative w.r.t. every sample"""
    n = plane.size
    var = plane.var()
    if var < config.VARIANCE_FLOOR:
        return 0.0, np.zeros_like(plane)

    dev = plane - plane.mean()
    lead, trail = _shifted_pair(dev, axis, lag)
    pairs = lead.size
    cross = np.sum(lead * trail)
    sum_sq = n * var

    # d(cross)/dx_j = forward neighbour + backward neighbour - (sum of both) / n
    forward = np.zeros_like(plane)
    backward = np.zeros_like(plane)
    if axis == "h":
        forward[:, : plane.shape[1] - lag] = trail
        backward[:, lag:] = lead
    else:
        forward[: plane.shape[0] - lag, :] = trail
        backward[lag:, :] = lead
    d_cross = forward + backward - (trail.sum() + lead.sum()) / n

    value = n * cross / (pairs * sum_sq)
    grad = (n / pairs) * (d_cross / sum_sq - cross * 2.0 * dev / sum_sq ** 2)
    return value, grad


def l_ap_gradient(pred: Pixels, gt: Pixels, spec: LagSpec = LagSpec()) -> np.ndarray:
    """Analytic gradient of l_ap with respect to pred, same shape as pred"""
    return l_ap_with_gradient(pred, gt, spec)[1]


def l_ap_with_gradient(pred: Pixels, gt: Pixels, spec: LagSpec = LagSpec()) -> Tuple[float, np.ndarray]:
    """Loss and gradient in one pass over the term grid; accumulation order is fixed"""
    p, g = _check_pair(pred, gt)
    slices = _blocks(p, spec)
    norm = _normalizer(p, spec)
    grad = np.zeros_like(p)
    total = 0.0
    for rows, cols in slices:
        for c in range(p.shape[2]):
            p_plane, g_plane = p[rows, cols, c], g[rows, cols, c]
            acc = np.zeros_like(p_plane)
            for lag in spec.lags:
                for axis in spec.axes:
                    value, d_value = _plane_gradient(p_plane, axis, lag)
                    diff = value - _plane_autocorrelation(g_plane, axis, lag)
                    total += diff ** 2
                    acc += (2.0 / norm) * diff * d_value
            grad[rows, cols, c] = acc
    return total / norm, grad
