import json
from pathlib import Path

import numpy as np
import pytest

from probcert import DecoderModel, LinearLayer, ReluLayer

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURE_MODEL = REPO_ROOT / "fixtures" / "np_decoder.json"
FIXTURE_META = REPO_ROOT / "fixtures" / "np_decoder.meta.json"


def pass_through_model() -> DecoderModel:
    """f(x, z) = z."""
    return DecoderModel(1, 1, (LinearLayer(np.array([[0.0, 1.0]]), np.array([0.0])),))


def pass_through_x_model() -> DecoderModel:
    """f(x, z) = x."""
    return DecoderModel(1, 1, (LinearLayer(np.array([[1.0, 0.0]]), np.array([0.0])),))


def random_network(
    rng, x_dim=1, z_dim=1, hidden=(6, 5), out_dim=1, scale=0.8
) -> DecoderModel:
    layers = []
    dims = [x_dim + z_dim] + list(hidden) + [out_dim]
    for i in range(len(dims) - 1):
        W = scale * rng.standard_normal((dims[i + 1], dims[i]))
        b = 0.3 * rng.standard_normal(dims[i + 1])
        layers.append(LinearLayer(W, b))
        if i < len(dims) - 2:
            layers.append(ReluLayer())
    return DecoderModel(x_dim, z_dim, tuple(layers))


@pytest.fixture
def fixture_model_path(monkeypatch):
    import os

    override = os.environ.get("PROBCERT_FIXTURE")
    path = Path(override) if override else FIXTURE_MODEL
    if not path.exists():
        pytest.skip("pretrained fixture not present")
    return path


@pytest.fixture
def fixture_meta():
    if not FIXTURE_META.exists():
        pytest.skip("fixture metadata not present")
    return json.loads(FIXTURE_META.read_text())
