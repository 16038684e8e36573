"""
Pytest Configuration and Fixtures
"""

import os
import sys

import numpy as np
import pytest

# Add src directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '../src'))

from dynamics_full import FullState, ModelParams  # noqa: E402
from dynamics_reduced import ReducedState  # noqa: E402
from exchange import ExchangeLaw  # noqa: E402
from spectral_core import (  # noqa: E402
    BulkField,
    SlabGeometry,
    SurfaceField,
    TorusGeometry,
    dealias_cubic,
    mean_free_project,
)


def smooth_random_field(torus: TorusGeometry, amplitude: float, seed: int) -> SurfaceField:
    """Mean-free band-limited field (|n_i| <= N/3) with the given sup-norm scale."""
    rng = np.random.Generator(np.random.PCG64(seed))
    raw = SurfaceField.from_values(torus, rng.uniform(-1.0, 1.0, size=(torus.N, torus.N)))
    field = mean_free_project(dealias_cubic(raw))
    return field * (amplitude / max(field.max_abs(), 1e-300))


@pytest.fixture
def smooth_field():
    """Factory for mean-free band-limited random fields."""
    return smooth_random_field


@pytest.fixture
def torus() -> TorusGeometry:
    """Unit torus on a small grid."""
    return TorusGeometry(L=1.0, N=16)


@pytest.fixture
def slab(torus) -> SlabGeometry:
    """Unit slab, |B| = |Gamma| = 1."""
    return SlabGeometry(base=torus, H=1.0, Mz=4)


@pytest.fixture
def params() -> ModelParams:
    return ModelParams(eps=0.1, delta=0.1, dt=1e-4, D=1.0)


@pytest.fixture
def noneq_law() -> ExchangeLaw:
    return ExchangeLaw.noneq(1.0, 1.0)


@pytest.fixture
def equilibrium_law() -> ExchangeLaw:
    return ExchangeLaw.equilibrium(1.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(7))


@pytest.fixture
def reduced_state(slab) -> ReducedState:
    """Well-prepared reduced state with a small smooth perturbation, M = 1."""
    phi_G = smooth_random_field(slab.base, 0.1, seed=3)
    u0 = 0.5
    v_mean = (1.0 - slab.volume * u0) / slab.base.area
    return ReducedState(t=0.0, u=u0, phi=phi_G - 0.4, v=0.5 * phi_G + v_mean, slab=slab)


@pytest.fixture
def full_state(slab) -> FullState:
    """Full-model counterpart of reduced_state with a constant bulk field."""
    phi_G = smooth_random_field(slab.base, 0.1, seed=3)
    u0 = 0.5
    v_mean = (1.0 - slab.volume * u0) / slab.base.area
    return FullState(t=0.0, u=BulkField.constant(slab, u0), phi=phi_G - 0.4,
                     v=0.5 * phi_G + v_mean)


@pytest.fixture
def homogeneous_full_state(slab) -> FullState:
    """phi = -1, v = 0, u = 0: stationary for the non-equilibrium law."""
    return FullState(t=0.0, u=BulkField.constant(slab, 0.0),
                     phi=SurfaceField.constant(slab.base, -1.0),
                     v=SurfaceField.constant(slab.base, 0.0))


@pytest.fixture(autouse=True)
def isolated_logs(monkeypatch, tmp_path_factory):
    """Keep log files out of the working tree."""
    monkeypatch.setenv("RAFTSIM_LOG_DIR", str(tmp_path_factory.getbasetemp() / "logs"))
