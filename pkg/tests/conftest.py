import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import cleavelab as cl


@pytest.fixture(scope="session")
def tri_basis():
    return cl.build_basis("triangular", 0.0)


@pytest.fixture(scope="session")
def square_basis():
    return cl.build_basis("square", 0.0)


@pytest.fixture(scope="session")
def cubic_basis():
    return cl.build_basis("cubic", 0.0, 0.0)


@pytest.fixture(scope="session")
def tri_model(tri_basis):
    return cl.model_from_preset(tri_basis, 1.0, 1.0)


@pytest.fixture(scope="session")
def square_model(square_basis):
    return cl.model_from_preset(square_basis, [1.0, 1.0], [1.0, 1.0])


@pytest.fixture(scope="session")
def cubic_model(cubic_basis):
    return cl.model_from_preset(cubic_basis, [1.0, 1.0], [1.0, 1.0])


@pytest.fixture(scope="session")
def tri_constants(tri_model):
    ec = cl.compute_elastic_constants(tri_model)
    betas = cl.bond_betas(tri_model)
    normals = cl.crystallographic_normals(tri_model.directions)
    fc = cl.compute_fracture_constants(betas, normals, transverse_lengths=[1.0],
                                       n_validate=20_000)
    return ec, fc


def assert_close(actual, expected, rtol=0.0, atol=0.0, label=""):
    actual = np.asarray(actual, dtype=float)
    expected = np.asarray(expected, dtype=float)
    np.testing.assert_allclose(actual, expected, rtol=rtol, atol=atol,
                               err_msg=label)
