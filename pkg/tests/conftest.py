import csv

import numpy as np
import pytest
from loguru import logger

from gridwave.core import save_image
from gridwave.models import Image, ToyModelConfig, RopeConfig, LagSpec, Seed


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def log_messages():
    """Messages emitted through loguru while the test runs"""
    messages = []
    handler_id = logger.add(lambda m: messages.append(m.record["message"]), level="DEBUG")
    yield messages
    logger.remove(handler_id)


@pytest.fixture
def write_png(tmp_path):
    def _write(data, name="img.png"):
        path = tmp_path / name
        save_image(Image(data), path)
        return path
    return _write


@pytest.fixture
def tiny_cfg():
    """Small model that trains in well under a second per iteration"""
    return ToyModelConfig(
        token_dim=16,
        heads=2,
        layers=1,
        rope=RopeConfig(d=4, grid_h=4, grid_w=4),
        lag_spec=LagSpec(lags=(4, 8)),
        seed=Seed(7),
    )


@pytest.fixture
def read_csv():
    """Rows of a written CSV as dicts, '#' comment lines skipped"""
    def _read(path):
        with open(path, "r", encoding="utf-8") as f:
            return list(csv.DictReader(line for line in f if not line.startswith("#")))
    return _read
