import numpy as np
import pytest

import ctfbp


@pytest.fixture
def small_geometry():
    return ctfbp.geometry_from_angles(40, 1.0)


@pytest.fixture
def unit_disk():
    return ctfbp.Phantom(
        shapes=(ctfbp.Shape(kind="ellipse", center=(0.0, 0.0), semi_axes=(1.0, 1.0)),),
        support_radius=1.0,
    )


@pytest.fixture
def random_sinogram(small_geometry):
    rng = np.random.default_rng(42)
    values = rng.normal(size=(small_geometry.n_radial, small_geometry.n_angles))
    return ctfbp.Sinogram(geometry=small_geometry, values=values)
