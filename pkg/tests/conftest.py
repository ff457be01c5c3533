"""Shared helpers for the test suite: random transforms and small scenes."""

from __future__ import annotations

import math

import numpy as np
import pytest

from cloudchange import Sim3Transform


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation matrix (QR of a Gaussian matrix)."""
    m = rng.normal(size=(3, 3))
    q, r = np.linalg.qr(m)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0.0:
        q[:, 2] = -q[:, 2]
    return q


def random_sim3(rng: np.random.Generator, scale_range=(0.2, 5.0)) -> Sim3Transform:
    lo, hi = scale_range
    scale = math.exp(rng.uniform(math.log(lo), math.log(hi)))
    return Sim3Transform(scale, random_rotation(rng), rng.uniform(-5.0, 5.0, 3))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
