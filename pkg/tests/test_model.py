import io
import json

import numpy as np
import pytest

from probcert import (
    DecoderModel,
    LinearLayer,
    ModelFormatError,
    ReluLayer,
    forward,
    forward_batch,
    load_model,
    save_model,
    validate,
)
from conftest import pass_through_model, random_network


MINIMAL = {
    "x_dim": 1,
    "z_dim": 1,
    "layers": [{"type": "linear", "W": [[0.0, 1.0]], "b": [0.0]}],
}


def test_load_minimal_pass_through():
    model = load_model(json.dumps(MINIMAL).encode("utf-8"))
    assert model.x_dim == 1 and model.z_dim == 1 and model.out_dim == 1
    assert forward(model, [0.3], [1.7])[0] == pytest.approx(1.7, abs=0)


def test_load_shape_mismatch_names_layer():
    bad = {
        "x_dim": 1,
        "z_dim": 1,
        "layers": [{"type": "linear", "W": [[0.0, 1.0], [1.0, 0.0], [1.0, 1.0]], "b": [0.0, 1.0]}],
    }
    with pytest.raises(ModelFormatError, match="layer 0"):
        load_model(json.dumps(bad))


def test_load_unsupported_activation():
    bad = {
        "x_dim": 1,
        "z_dim": 1,
        "layers": [
            {"type": "linear", "W": [[0.0, 1.0]], "b": [0.0]},
            {"type": "tanh"},
            {"type": "linear", "W": [[1.0]], "b": [0.0]},
        ],
    }
    with pytest.raises(ModelFormatError, match="layer 1"):
        load_model(json.dumps(bad))


def test_load_rejects_non_json():
    with pytest.raises(ModelFormatError, match="JSON"):
        load_model(b"{not json")


def test_load_from_stream_and_path(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(MINIMAL))
    m1 = load_model(str(path))
    m2 = load_model(io.BytesIO(path.read_bytes()))
    assert np.array_equal(m1.layers[0].W, m2.layers[0].W)


def test_forward_affine_arithmetic():
    model = DecoderModel(1, 1, (LinearLayer(np.array([[1.0, -1.0]]), np.array([0.5])),))
    assert forward(model, [2.0], [1.0])[0] == pytest.approx(1.5, abs=0)


def test_forward_dimension_mismatch():
    model = pass_through_model()
    with pytest.raises(ValueError, match="expected x of length"):
        forward(model, [1.0, 2.0], [0.0])


def test_forward_deterministic_bitwise():
    rng = np.random.default_rng(0)
    model = random_network(rng, hidden=(8, 8))
    x, z = rng.standard_normal(1), rng.standard_normal(1)
    a = forward(model, x, z)
    b = forward(model, x, z)
    assert np.array_equal(a, b)


def test_forward_batch_matches_single():
    rng = np.random.default_rng(1)
    model = random_network(rng, z_dim=3, hidden=(7,))
    x = rng.standard_normal(1)
    Z = rng.standard_normal((20, 3))
    batched = forward_batch(model, x, Z)
    for i in range(20):
        np.testing.assert_allclose(batched[i], forward(model, x, Z[i]), rtol=1e-12)


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    model = random_network(rng, x_dim=2, z_dim=2, hidden=(5, 4), out_dim=3)
    path = tmp_path / "roundtrip.json"
    save_model(model, path)
    loaded = load_model(str(path))
    for orig, back in zip(model.layers, loaded.layers):
        if isinstance(orig, LinearLayer):
            np.testing.assert_allclose(back.W, orig.W, rtol=1e-9)
            np.testing.assert_allclose(back.b, orig.b, rtol=1e-9)


def test_affine_decomposition_in_z():
    # single linear layer: f(x, z1+z2) + f(x, 0) == f(x, z1) + f(x, z2)
    rng = np.random.default_rng(3)
    W = rng.standard_normal((3, 4))
    model = DecoderModel(2, 2, (LinearLayer(W, rng.standard_normal(3)),))
    x = rng.standard_normal(2)
    z1, z2 = rng.standard_normal(2), rng.standard_normal(2)
    lhs = forward(model, x, z1 + z2) + forward(model, x, np.zeros(2))
    rhs = forward(model, x, z1) + forward(model, x, z2)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


class TestValidate:
    def test_valid_model_empty_report(self):
        rng = np.random.default_rng(4)
        assert validate(random_network(rng)) == []

    def test_nan_weight_names_layer(self):
        W = np.array([[0.0, np.nan]])
        model = DecoderModel(1, 1, (LinearLayer(W, np.array([0.0])),))
        findings = validate(model)
        assert len(findings) == 1 and "layer 0" in findings[0]

    def test_activation_after_activation(self):
        model = DecoderModel(
            1,
            1,
            (
                LinearLayer(np.array([[0.0, 1.0]]), np.array([0.0])),
                ReluLayer(),
                ReluLayer(),
                LinearLayer(np.array([[1.0]]), np.array([0.0])),
            ),
        )
        assert any("activation must follow a linear layer" in f for f in validate(model))

    def test_must_end_with_linear(self):
        model = DecoderModel(
            1,
            1,
            (LinearLayer(np.array([[0.0, 1.0]]), np.array([0.0])), ReluLayer()),
        )
        assert any("end with a linear" in f for f in validate(model))


class TestPretrainedFixture:
    def test_architecture(self, fixture_model_path):
        model = load_model(str(fixture_model_path))
        assert len(model.linear_layers) == 4
        assert model.out_dim == 1
        assert all(l.W.shape[0] == 64 for l in model.linear_layers[:3])

    def test_matches_trainer_forward_values(self, fixture_model_path, fixture_meta):
        # cross-language contract: the trainer records reference evaluations
        model = load_model(str(fixture_model_path))
        refs = fixture_meta["reference_evals"]
        assert len(refs) >= 5
        for ref in refs:
            got = forward(model, ref["x"], ref["z"])[0]
            assert got == pytest.approx(ref["y"], abs=1e-5)
