import numpy as np
import pytest

from gridwave.errors import ConfigError, ImageTooSmall, LagOutOfRange, ShapeMismatch
from gridwave.latent_pack import periodic_tile_demo
from gridwave.models import Image, LagSpec
from gridwave.periodicity_loss import (
    autocorrelation,
    autocorrelation_terms,
    l_ap,
    l_ap_gradient,
    l_ap_with_gradient,
    quadrant_partition,
)


def brute_autocorrelation(plane, axis, lag):
    """Direct double loop over every overlapping pair"""
    h, w = plane.shape
    mu = plane.mean()
    var = ((plane - mu) ** 2).mean()
    if var < 1e-12:
        return 0.0
    total, count = 0.0, 0
    for r in range(h):
        for c in range(w):
            r2, c2 = (r, c + lag) if axis == "h" else (r + lag, c)
            if r2 < h and c2 < w:
                total += (plane[r, c] - mu) * (plane[r2, c2] - mu)
                count += 1
    return total / (count * var)


def brute_l_ap(pred, gt, lags):
    h, w = pred.shape
    top, left = (h + 1) // 2, (w + 1) // 2
    blocks = [(slice(0, top), slice(0, left)), (slice(0, top), slice(left, w)),
              (slice(top, h), slice(0, left)), (slice(top, h), slice(left, w))]
    total = 0.0
    for rows, cols in blocks:
        for lag in lags:
            for axis in ("h", "v"):
                diff = brute_autocorrelation(pred[rows, cols], axis, lag) - brute_autocorrelation(gt[rows, cols], axis, lag)
                total += diff ** 2
    return total / (2 * 4 * len(lags))


def shifted_grating(size=128, period=32, shift=4.5):
    cols = np.arange(size, dtype=np.float64)
    row = np.cos(2.0 * np.pi * (cols + shift) / period)
    return np.tile(row, (size, 1))


def test_l_ap_matches_double_sum():
    spec = LagSpec(lags=(2, 4))
    for seed in range(20):
        rng = np.random.default_rng(seed)
        pred, gt = rng.uniform(size=(16, 16)), rng.uniform(size=(16, 16))
        assert l_ap(pred, gt, spec) == pytest.approx(brute_l_ap(pred, gt, (2, 4)), rel=1e-10, abs=1e-14)


def square_grating(size=64, period=32):
    row = (np.arange(size) % period < period // 2).astype(np.float64)
    return np.tile(row, (size, 1))


@pytest.mark.parametrize("lag, expected", [(32, 1.0), (16, -1.0), (8, 1.0 / 7.0)])
def test_autocorrelation_of_square_grating(lag, expected):
    plane = square_grating()
    # 56 overlapping columns at lag 8: 32 same-sign pairs, 24 opposite
    assert brute_autocorrelation(plane, "h", lag) == pytest.approx(expected, abs=1e-6)
    assert autocorrelation(plane, 0, "h", lag) == pytest.approx(expected, abs=1e-6)


def test_autocorrelation_of_shifted_grating():
    block = quadrant_partition(Image(shifted_grating()))[0]
    assert autocorrelation(block, 0, "h", 32) == pytest.approx(1.0, abs=1e-12)
    assert autocorrelation(block, 0, "h", 16) == pytest.approx(-1.0, abs=1e-12)
    assert autocorrelation(block, 0, "h", 8) == pytest.approx(0.0, abs=1e-12)


def test_lag_zero_gives_one(rng):
    assert autocorrelation(rng.uniform(size=(6, 6)), 0, "v", 0) == pytest.approx(1.0, rel=1e-12)


def test_constant_plane_scores_zero():
    assert autocorrelation(np.full((8, 8), 0.3), 0, "h", 2) == 0.0


def test_unknown_axis():
    with pytest.raises(ConfigError):
        autocorrelation(np.zeros((4, 4)), 0, "d", 1)


def test_gradient_matches_finite_differences():
    spec = LagSpec(lags=(4, 8))
    step = 1e-5
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        pred = rng.uniform(size=(32, 32, 1))
        gt = rng.uniform(size=(32, 32, 1))
        grad = l_ap_gradient(pred, gt, spec)
        for _ in range(10):
            r, c = (int(x) for x in rng.integers(0, 32, 2))
            up, down = pred.copy(), pred.copy()
            up[r, c, 0] += step
            down[r, c, 0] -= step
            numeric = (l_ap(up, gt, spec) - l_ap(down, gt, spec)) / (2 * step)
            assert grad[r, c, 0] == pytest.approx(numeric, rel=1e-4, abs=1e-9)


def test_loss_and_gradient_agree_with_separate_calls(rng):
    spec = LagSpec(lags=(2, 3))
    pred, gt = rng.uniform(size=(12, 10, 3)), rng.uniform(size=(12, 10, 3))
    value, grad = l_ap_with_gradient(pred, gt, spec)
    assert value == pytest.approx(l_ap(pred, gt, spec), rel=1e-12)
    assert grad.shape == pred.shape


def test_gradient_vanishes_at_the_target_and_on_flat_input(rng):
    spec = LagSpec(lags=(2,))
    gt = rng.uniform(size=(8, 8, 1))
    assert l_ap(gt, gt, spec) == 0.0
    assert np.all(l_ap_gradient(gt, gt, spec) == 0.0)
    assert np.all(l_ap_gradient(np.full((8, 8, 1), 0.5), gt, spec) == 0.0)


def test_loss_is_symmetric_and_non_negative(rng):
    spec = LagSpec(lags=(1, 3))
    for _ in range(10):
        a, b = rng.uniform(size=(10, 10)), rng.uniform(size=(10, 10))
        assert l_ap(a, b, spec) == l_ap(b, a, spec)
        assert l_ap(a, b, spec) >= 0.0


def test_lag_must_fit_in_every_block():
    with pytest.raises(LagOutOfRange):
        l_ap(np.zeros((16, 16)), np.zeros((16, 16)), LagSpec(lags=(8,)))
    with pytest.raises(LagOutOfRange):
        autocorrelation(np.zeros((4, 4)), 0, "h", 4)
    l_ap(np.zeros((16, 16)), np.zeros((16, 16)), LagSpec(lags=(8,), quadrants=1))


def test_mismatched_shapes():
    with pytest.raises(ShapeMismatch):
        l_ap(np.zeros((8, 8)), np.zeros((8, 10)), LagSpec(lags=(1,)))


def test_image_too_small_for_quadrants():
    with pytest.raises(ImageTooSmall):
        l_ap(np.zeros((1, 8)), np.zeros((1, 8)), LagSpec(lags=(1,)))


def test_odd_extent_gives_the_extra_row_to_the_top_block():
    shapes = [q.shape[:2] for q in quadrant_partition(Image(np.zeros((5, 7))))]
    assert shapes == [(3, 4), (3, 3), (2, 4), (2, 3)]


def test_terms_are_ordered_quadrant_channel_lag_axis(rng):
    terms = autocorrelation_terms(rng.uniform(size=(8, 8, 3)), LagSpec(lags=(1, 2)))
    assert len(terms) == 4 * 3 * 2 * 2
    keys = [(t["quadrant"], t["channel"], t["lag"], t["axis"]) for t in terms]
    assert keys[:5] == [(0, 0, 1, "h"), (0, 0, 1, "v"), (0, 0, 2, "h"), (0, 0, 2, "v"), (0, 1, 1, "h")]
    assert keys == sorted(keys)


def test_tile_prediction_is_penalized_more_than_fresh_noise():
    token = np.random.default_rng(11).uniform(0.0, 1.0, 32 * 32)
    pred = periodic_tile_demo(token, 4, 4, 32).data
    gt = 0.5 + 0.1 * np.random.default_rng(12).standard_normal((128, 128, 1))
    other = 0.5 + 0.1 * np.random.default_rng(13).standard_normal((128, 128, 1))
    tiled = l_ap(pred, gt)
    assert tiled > 0.0
    assert tiled > l_ap(other, gt)


def test_shifting_a_periodic_block_keeps_its_autocorrelation():
    token = np.random.default_rng(4).uniform(0.0, 1.0, 8 * 8)
    block = quadrant_partition(periodic_tile_demo(token, 16, 16, 8))[0].data
    for lag in (8, 16):
        expected = autocorrelation(block, 0, "h", lag)
        assert autocorrelation(np.roll(block, lag, axis=1), 0, "h", lag) == expected
        assert autocorrelation(np.roll(block, 3, axis=1), 0, "h", lag) == pytest.approx(expected, abs=1e-12)
        assert autocorrelation(np.roll(block, lag, axis=0), 0, "v", lag) == expected
