import numpy as np
import pytest

from gridwave.core import rng_stream
from gridwave.errors import DivisibilityError
from gridwave.models import Seed
from gridwave.synthetic import (
    EVAL_SEED_OFFSET,
    clean_image,
    grid_free_periods,
    texture_image,
    tile_pattern,
    write_corpus,
    write_train_eval,
)


def test_generators_are_seeded():
    assert np.array_equal(clean_image(4, size=32).data, clean_image(4, size=32).data)
    assert not np.array_equal(clean_image(4, size=32).data, clean_image(5, size=32).data)


def test_texture_is_rgb_in_range():
    img = texture_image(0, size=32)
    assert img.shape == (32, 32, 3)
    assert img.data.min() >= 0.0 and img.data.max() <= 1.0


def test_tile_pattern_is_zero_mean_and_periodic():
    pattern = tile_pattern(8, 32, 16, rng_stream(Seed(1)))
    assert pattern.mean() == pytest.approx(0.0, abs=1e-15)
    assert np.array_equal(pattern[8:], pattern[:-8])
    with pytest.raises(DivisibilityError):
        tile_pattern(8, 30, 16, rng_stream(Seed(1)))


def test_train_and_eval_sets_do_not_share_images(tmp_path):
    paths = write_train_eval(tmp_path, train_count=2, eval_count=2, seed=0, size=16)
    train = {p.read_bytes() for p in paths["train"]}
    assert not train & {p.read_bytes() for p in paths["eval"]}
    assert [p.name for p in paths["eval"]] == ["eval_0000.png", "eval_0001.png"]


def test_ablation_corpus_keeps_sinusoids_clear_of_the_token_period(tmp_path):
    low, high = grid_free_periods(8)
    assert (low, high) == pytest.approx((10.4, 14.0))
    paths = write_train_eval(tmp_path / "pair", 1, 1, seed=0, size=32, token_period=8)
    reference = write_corpus(tmp_path / "ref", 1, seed=EVAL_SEED_OFFSET, size=32, prefix="eval", periods=(low, high))
    assert paths["eval"][0].read_bytes() == reference[0].read_bytes()

    plain = write_train_eval(tmp_path / "plain", 1, 1, seed=0, size=32, token_period=None)
    assert plain["train"][0].read_bytes() == write_corpus(tmp_path / "ref2", 1, seed=0, size=32, prefix="train")[0].read_bytes()
