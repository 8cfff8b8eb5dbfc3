import functools
import math

import numpy as np
import pytest

from steklovbif import ProductModel, assemble, flat_torus_spectrum, generate_disk, generate_interval


@functools.lru_cache(maxsize=None)
def _disk(level):
    mesh = generate_disk(level)
    return mesh, assemble(mesh)


@functools.lru_cache(maxsize=None)
def _interval(n, L):
    mesh = generate_interval(n, L)
    return mesh, assemble(mesh)


@functools.lru_cache(maxsize=None)
def _torus(cutoff):
    return flat_torus_spectrum(2.0 * math.pi * np.eye(2), cutoff)


@functools.lru_cache(maxsize=None)
def _disk_torus_model(level, cutoff):
    mesh, forms = _disk(level)
    return ProductModel(
        factor=_torus(cutoff), boundary_mesh=mesh, boundary_forms=forms,
        m1=2, m2=2, H2=1.0,
    )


@functools.lru_cache(maxsize=None)
def _torus_interval_model(n):
    mesh, forms = _interval(n, 1.0)
    return ProductModel(
        factor=_torus(20.0), boundary_mesh=mesh, boundary_forms=forms,
        m1=2, m2=1, H2=0.0,
    )


@pytest.fixture(scope="session")
def disk():
    """Cached (mesh, forms) of the unit disk by refinement level."""
    return _disk


@pytest.fixture(scope="session")
def interval():
    """Cached (mesh, forms) of [0, L] by (n, L)."""
    return _interval


@pytest.fixture(scope="session")
def square_torus():
    """Cached spectrum of the 2pi-square torus by cutoff."""
    return _torus


@pytest.fixture(scope="session")
def disk_torus_model():
    """Disk x 2pi-square-torus model (m1 = m2 = 2, H2 = 1, Hhat = 1/3)."""
    return _disk_torus_model


@pytest.fixture(scope="session")
def torus_interval_model():
    """2pi-square-torus x interval model (Hhat = 0)."""
    return _torus_interval_model
