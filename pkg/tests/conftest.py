import numpy as np
import pytest

from lftident import model as model_mod
from lftident import testing


@pytest.fixture
def siso1():
    return testing.siso1()


@pytest.fixture
def dup2():
    return testing.dup2()


@pytest.fixture
def theta_free():
    return testing.theta_free()


@pytest.fixture
def siso1_path(tmp_path):
    p = tmp_path / "siso1.json"
    model_mod.save_model(testing.siso1(), p)
    return p


@pytest.fixture
def dup2_path(tmp_path):
    p = tmp_path / "dup2.json"
    model_mod.save_model(testing.dup2(), p)
    return p


def model_pool(n, start=0):
    """Deterministic mixed pool of regular well-posed models."""
    kinds = [
        dict(),
        dict(kernel_rich=True),
        dict(time_domain="discrete"),
        dict(singular_E=True),
    ]
    out = []
    for i in range(n):
        out.append(testing.random_regular_model(start + i, **kinds[i % len(kinds)]))
    return out


def interior_theta(model, seed, scale=0.5):
    rng = np.random.default_rng(seed)
    t = rng.standard_normal(model.dims.q)
    t *= scale * np.sqrt(model.theta_domain.radius) / max(np.linalg.norm(t), 1e-12)
    return t
