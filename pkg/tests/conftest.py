"""Shared fixtures for tvgeo tests."""

import numpy as np
import pytest

from tvgeo.core.grid import DualField, GridImage
from tvgeo.core.imageio import save
from tvgeo.core.shapes import Disc, Rectangle, rasterize
from tvgeo.core.solver import SolverConfig

N = 32  # grid size used by the fast tests


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(1234))


@pytest.fixture
def disc() -> Disc:
    return Disc(0.5, 0.5, 0.25)


@pytest.fixture
def square() -> Rectangle:
    return Rectangle(0.25, 0.25, 0.5, 0.5)


@pytest.fixture
def disc_image(disc) -> GridImage:
    return rasterize(disc, N)


@pytest.fixture
def random_image(rng) -> GridImage:
    return GridImage(rng.standard_normal((N, N)))


@pytest.fixture
def random_field(rng) -> DualField:
    return DualField(rng.standard_normal((N, N, 4)))


@pytest.fixture
def fast_cfg() -> SolverConfig:
    return SolverConfig(lam=0.05, max_iters=3000, gap_tol=1e-8, record_every=50)


@pytest.fixture
def disc_pgm(disc_image, tmp_path):
    p = tmp_path / "disc.pgm"
    save(disc_image, p)
    return p
