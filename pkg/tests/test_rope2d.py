import numpy as np
import pytest

from gridwave.errors import ConfigError, ShapeMismatch
from gridwave.models import RopeConfig, Seed
from gridwave.rope2d import (
    adjacent_similarity_map,
    phase_delta_table,
    phase_deltas,
    rotate_features,
    rotate_grid,
    rotation_tables,
    similarity_zone_size,
    strong_bandwidth,
)


def brute_rotate(v, m_h, m_w, d, theta):
    """Rotate pair by pair with explicit 2x2 matrices"""
    out = np.empty_like(v)
    for half, m in ((0, m_h), (1, m_w)):
        for i in range(d // 2):
            angle = m * theta ** (-2.0 * i / d)
            c, s = np.cos(angle), np.sin(angle)
            a, b = v[half * d + 2 * i], v[half * d + 2 * i + 1]
            out[half * d + 2 * i] = c * a - s * b
            out[half * d + 2 * i + 1] = s * a + c * b
    return out


@pytest.mark.parametrize("theta, expected", [(10000.0, 8), (100.0, 15)])
def test_strong_bandwidth_counts(theta, expected):
    assert strong_bandwidth(RopeConfig(d=56, theta=theta), 5.0) == expected


def test_phase_deltas_values():
    deltas = phase_deltas(RopeConfig(d=56, theta=100.0))
    assert deltas.shape == (28,)
    assert deltas[0] == 1.0
    assert deltas[27] == pytest.approx(100.0 ** (-54.0 / 56.0), rel=1e-12)
    assert np.all(np.diff(deltas) < 0)


def test_phase_delta_table_matches_bandwidth():
    cfg = RopeConfig(d=56, theta=10000.0)
    table = phase_delta_table(cfg, 5.0)
    assert len(table) == 28
    assert sum(row["strong"] for row in table) == 8
    assert table[3]["degrees"] == pytest.approx(np.rad2deg(table[3]["radians"]))


def test_threshold_must_be_positive():
    with pytest.raises(ConfigError):
        strong_bandwidth(RopeConfig(), 0.0)


def test_rotation_matches_pairwise_matrices(rng):
    cfg = RopeConfig(d=8, theta=100.0)
    v = rng.standard_normal(16)
    assert np.allclose(rotate_features(v, (3, -5), cfg), brute_rotate(v, 3, -5, 8, 100.0), atol=1e-13)


def test_origin_is_identity(rng):
    v = rng.standard_normal(112)
    assert np.array_equal(rotate_features(v, (0, 0), RopeConfig()), v)


def test_norm_and_relative_position_identities():
    cfg = RopeConfig(d=56, theta=10000.0, grid_h=16, grid_w=16)
    rng = np.random.default_rng(0)
    for _ in range(100):
        q, k = rng.standard_normal(112), rng.standard_normal(112)
        m = tuple(int(x) for x in rng.integers(0, 16, 2))
        n = tuple(int(x) for x in rng.integers(0, 16, 2))
        rq = rotate_features(q, m, cfg)
        assert np.linalg.norm(rq) == pytest.approx(np.linalg.norm(q), rel=1e-12)

        lhs = rq @ rotate_features(k, n, cfg)
        rhs = q @ rotate_features(k, (n[0] - m[0], n[1] - m[1]), cfg)
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


def test_wrong_vector_length():
    with pytest.raises(ShapeMismatch):
        rotate_features(np.zeros(10), (0, 0), RopeConfig(d=8))


def test_rotate_grid_agrees_with_single_vectors(rng):
    cfg = RopeConfig(d=4, theta=100.0)
    features = rng.standard_normal((3, 5, 8))
    rotated = rotate_grid(features, cfg)
    for r in range(3):
        for c in range(5):
            assert np.allclose(rotated[r, c], rotate_features(features[r, c], (r, c), cfg), atol=1e-14)


def test_rotation_tables_are_row_major():
    cfg = RopeConfig(d=4, theta=10.0)
    cos, sin = rotation_tables(cfg, 2, 3)
    assert cos.shape == (6, 4)
    # token 4 sits at (1, 1): angles (1, 10^-1/2, 1, 10^-1/2)
    deltas = phase_deltas(cfg)
    assert np.allclose(cos[4], np.cos(np.concatenate([deltas, deltas])), atol=1e-15)
    assert np.allclose(sin[2], np.sin(np.concatenate([0 * deltas, 2 * deltas])), atol=1e-15)


def test_similarity_map_shape_and_center():
    cfg = RopeConfig(d=56, theta=10000.0, grid_h=15, grid_w=15)
    grid = adjacent_similarity_map(cfg, 64, Seed(42))
    assert (grid.rows, grid.cols) == (15, 15)
    assert grid.data[7, 7] == 1.0
    assert np.all(grid.data <= 1.0 + 1e-12)
    # cos is even, so the map is point-symmetric about the center
    assert np.allclose(grid.data, grid.data[::-1, ::-1], atol=1e-12)


def test_similarity_map_is_seed_deterministic():
    cfg = RopeConfig(d=16, grid_h=9, grid_w=9)
    a = adjacent_similarity_map(cfg, 32, Seed(3))
    b = adjacent_similarity_map(cfg, 32, Seed(3))
    assert np.array_equal(a.data, b.data)


def test_similarity_map_agrees_with_explicit_rotations():
    cfg = RopeConfig(d=8, theta=100.0, grid_h=5, grid_w=5)
    grid = adjacent_similarity_map(cfg, 16, Seed(11))

    rng = np.random.default_rng(np.random.PCG64(11))
    samples = rng.standard_normal((16, 16))
    samples /= np.linalg.norm(samples, axis=1, keepdims=True)
    r, c = 1, 4
    sims = [rotate_features(u, (2, 2), cfg) @ rotate_features(u, (r, c), cfg) for u in samples]
    assert grid.data[r, c] == pytest.approx(np.mean(sims) / np.mean(np.sum(samples ** 2, axis=1)), abs=1e-12)


def test_low_base_frequency_shrinks_the_similarity_zone():
    small = dict(d=56, grid_h=33, grid_w=33)
    wide = adjacent_similarity_map(RopeConfig(theta=10000.0, **small), 256, Seed(42))
    narrow = adjacent_similarity_map(RopeConfig(theta=100.0, **small), 256, Seed(42))
    assert narrow.data[16, 17] < wide.data[16, 17]
    assert similarity_zone_size(narrow, 0.9) < similarity_zone_size(wide, 0.9)
    assert similarity_zone_size(narrow, 0.99) <= similarity_zone_size(wide, 0.99)


@pytest.mark.slow
def test_similarity_zone_full_grid():
    wide = adjacent_similarity_map(RopeConfig(d=56, theta=10000.0), 256, Seed(42))
    narrow = adjacent_similarity_map(RopeConfig(d=56, theta=100.0), 256, Seed(42))
    assert similarity_zone_size(narrow, 0.9) < similarity_zone_size(wide, 0.9)
    assert similarity_zone_size(narrow) <= similarity_zone_size(wide)


def test_similarity_map_needs_3x3_grid():
    with pytest.raises(ShapeMismatch):
        adjacent_similarity_map(RopeConfig(d=8, grid_h=2, grid_w=8))


def test_rotation_is_undone_by_the_opposite_position(rng):
    cfg = RopeConfig(d=8, theta=100.0)
    for _ in range(20):
        v = rng.standard_normal(16)
        m_h, m_w = (int(x) for x in rng.integers(-50, 50, 2))
        back = rotate_features(rotate_features(v, (m_h, m_w), cfg), (-m_h, -m_w), cfg)
        np.testing.assert_allclose(back, v, rtol=0, atol=1e-12)


def test_bandwidth_shrinks_with_theta_and_threshold():
    thetas = [10.0, 100.0, 1000.0, 10000.0, 1e6]
    counts = [strong_bandwidth(RopeConfig(d=56, theta=t), 5.0) for t in thetas]
    assert counts == sorted(counts, reverse=True)

    thresholds = [0.5, 1.0, 5.0, 20.0, 57.0, 360.0]
    counts = [strong_bandwidth(RopeConfig(d=56, theta=100.0), t) for t in thresholds]
    assert counts == sorted(counts, reverse=True)
    assert counts[-1] == 0
