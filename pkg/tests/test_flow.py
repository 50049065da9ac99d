import numpy as np
import pytest

from gridwave.errors import ConfigError, DivisibilityError, ShapeMismatch
from gridwave.models import Image, TokenGrid, ToyModelConfig
from gridwave.one_step_sr.flow import anchor_lr, degrade_to_lr, interpolate_flow, synthesize_lr, upsample_nearest


@pytest.fixture
def latents(rng):
    return TokenGrid(rng.standard_normal((3, 4, 8))), TokenGrid(rng.standard_normal((3, 4, 8)))


def test_endpoints_are_exact(latents):
    z_hr, eps = latents
    assert np.array_equal(interpolate_flow(z_hr, eps, 1.0).data, z_hr.data)
    assert np.array_equal(interpolate_flow(z_hr, eps, 0.0).data, eps.data)


def test_interior_point(latents):
    z_hr, eps = latents
    z = interpolate_flow(z_hr, eps, 0.3)
    assert np.allclose(z.data, 0.3 * z_hr.data + 0.7 * eps.data, atol=1e-15)


def test_path_is_linear_in_t(latents):
    z_hr, eps = latents
    a, b = interpolate_flow(z_hr, eps, 0.2).data, interpolate_flow(z_hr, eps, 0.6).data
    mid = interpolate_flow(z_hr, eps, 0.4).data
    assert np.allclose(mid, (a + b) / 2.0, atol=1e-14)


def test_flow_errors(latents):
    z_hr, eps = latents
    with pytest.raises(ConfigError):
        interpolate_flow(z_hr, eps, 1.5)
    with pytest.raises(ShapeMismatch):
        interpolate_flow(z_hr, TokenGrid(np.zeros((3, 4, 4))), 0.5)


def test_anchor_keeps_the_lr_latent_bit_exact(latents):
    z_lr, _ = latents
    state = anchor_lr(z_lr, ToyModelConfig())
    assert state.t == 0.3
    assert state.z_t.data.tobytes() == z_lr.data.tobytes()
    assert state.z_hr is None and state.eps is None


def test_anchor_at_one_warns(latents, log_messages):
    z_lr, _ = latents
    state = anchor_lr(z_lr, ToyModelConfig(t_mid=1.0))
    assert state.t == 1.0
    assert any("degenerate" in m for m in log_messages)


def test_degrade_shapes_and_box_blur():
    hr = Image(np.ones((8, 6, 3)))
    lr = degrade_to_lr(hr, 2)
    assert lr.shape == (4, 3, 3)
    assert np.allclose(lr.data, 1.0)

    impulse = np.zeros((6, 6))
    impulse[2, 2] = 9.0
    assert degrade_to_lr(Image(impulse), 2).data[1, 1, 0] == pytest.approx(1.0)


def test_degrade_needs_divisible_extents():
    with pytest.raises(DivisibilityError):
        degrade_to_lr(Image(np.zeros((7, 8))), 2)


def test_synthesized_lr_matches_hr_size(rng):
    hr = Image(rng.uniform(size=(8, 8, 3)))
    assert synthesize_lr(hr, 2).shape == hr.shape
    up = upsample_nearest(Image(np.arange(4.0).reshape(2, 2)), 2)
    assert up.data[:, :, 0].tolist() == [[0, 0, 1, 1], [0, 0, 1, 1], [2, 2, 3, 3], [2, 2, 3, 3]]
