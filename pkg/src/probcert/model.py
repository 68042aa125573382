"""Feedforward decoder networks with a split first layer.

A decoder maps a conditioning input ``x`` and a latent sample ``z`` to an
output vector.  The first linear layer acts on the concatenation ``[x; z]``;
the split between conditioning and latent columns is declared by
``x_dim``/``z_dim``.  Subsequent layers alternate ReLU and linear maps.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np


class ModelFormatError(ValueError):
    """Raised when a model file cannot be parsed into a valid network."""


@dataclass(frozen=True)
class LinearLayer:
    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "W", _freeze(np.asarray(self.W, dtype=np.float64)))
        object.__setattr__(self, "b", _freeze(np.asarray(self.b, dtype=np.float64)))


@dataclass(frozen=True)
class ReluLayer:
    pass


Layer = LinearLayer | ReluLayer


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class DecoderModel:
    """Immutable network description; safe to share across workers."""

    x_dim: int
    z_dim: int
    layers: tuple[Layer, ...]

    @property
    def out_dim(self) -> int:
        return int(self.layers[-1].W.shape[0])

    @property
    def linear_layers(self) -> tuple[LinearLayer, ...]:
        return tuple(l for l in self.layers if isinstance(l, LinearLayer))

    @property
    def first_layer_split(self) -> tuple[np.ndarray, np.ndarray]:
        """(conditioning block, latent block) of the first linear layer."""
        W = self.layers[0].W
        return W[:, : self.x_dim], W[:, self.x_dim :]


def validate(model: DecoderModel) -> list[str]:
    """Check every structural invariant; returns one finding per violation.

    An empty list means the model is valid.  Findings name the offending
    layer index so load errors are actionable.
    """
    findings: list[str] = []
    if model.x_dim < 1:
        findings.append(f"x_dim must be positive, got {model.x_dim}")
    if model.z_dim < 1:
        findings.append(f"z_dim must be positive, got {model.z_dim}")
    if not model.layers:
        findings.append("model has no layers")
        return findings

    if not isinstance(model.layers[0], LinearLayer):
        findings.append("layer 0: model must begin with a linear layer")
    if not isinstance(model.layers[-1], LinearLayer):
        findings.append(f"layer {len(model.layers) - 1}: model must end with a linear layer")

    prev_dim = None
    for i, layer in enumerate(model.layers):
        if isinstance(layer, LinearLayer):
            if i > 0 and isinstance(model.layers[i - 1], LinearLayer):
                findings.append(f"layer {i}: consecutive linear layers (missing activation)")
            W, b = layer.W, layer.b
            if W.ndim != 2 or b.ndim != 1:
                findings.append(f"layer {i}: W must be a matrix and b a vector")
                continue
            if W.shape[0] != b.shape[0]:
                findings.append(
                    f"layer {i}: W has {W.shape[0]} rows but b has length {b.shape[0]}"
                )
            if not np.all(np.isfinite(W)) or not np.all(np.isfinite(b)):
                findings.append(f"layer {i}: non-finite weight or bias")
            expected_in = model.x_dim + model.z_dim if prev_dim is None else prev_dim
            if W.shape[1] != expected_in:
                findings.append(
                    f"layer {i}: expected {expected_in} input columns, got {W.shape[1]}"
                )
            prev_dim = W.shape[0]
        else:
            if i == 0 or not isinstance(model.layers[i - 1], LinearLayer):
                findings.append(f"layer {i}: activation must follow a linear layer")
            # ReLU preserves dimension; nothing else to check.
    return findings


def _layers_from_json(obj: dict) -> tuple[Layer, ...]:
    layers: list[Layer] = []
    for i, spec in enumerate(obj["layers"]):
        kind = spec.get("type")
        if kind == "linear":
            try:
                W = np.asarray(spec["W"], dtype=np.float64)
                b = np.asarray(spec["b"], dtype=np.float64)
            except (KeyError, ValueError) as exc:
                raise ModelFormatError(f"layer {i}: bad linear payload: {exc}") from exc
            layers.append(LinearLayer(W, b))
        elif kind == "relu":
            layers.append(ReluLayer())
        else:
            raise ModelFormatError(f"layer {i}: unsupported activation kind {kind!r}")
    return tuple(layers)


def load_model(source) -> DecoderModel:
    """Parse a model from a byte stream, path, or JSON string and validate it."""
    if isinstance(source, (str, bytes)) and not _looks_like_json(source):
        with open(source, "rb") as fh:
            data = fh.read()
    elif hasattr(source, "read"):
        data = source.read()
    else:
        data = source
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc

    for key in ("x_dim", "z_dim", "layers"):
        if key not in obj:
            raise ModelFormatError(f"model file missing required key {key!r}")
    model = DecoderModel(int(obj["x_dim"]), int(obj["z_dim"]), _layers_from_json(obj))
    findings = validate(model)
    if findings:
        raise ModelFormatError("invalid model: " + "; ".join(findings))
    return model


def _looks_like_json(s) -> bool:
    head = s[:64].lstrip() if isinstance(s, str) else s[:64].lstrip(b" \t\r\n")
    return head.startswith("{") if isinstance(head, str) else head.startswith(b"{")


def model_to_json(model: DecoderModel) -> dict:
    layers = []
    for layer in model.layers:
        if isinstance(layer, LinearLayer):
            layers.append({"type": "linear", "W": layer.W.tolist(), "b": layer.b.tolist()})
        else:
            layers.append({"type": "relu"})
    return {"x_dim": int(model.x_dim), "z_dim": int(model.z_dim), "layers": layers}


def save_model(model: DecoderModel, path) -> None:
    text = json.dumps(model_to_json(model))
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def model_digest(model: DecoderModel) -> str:
    """sha256 over the canonical JSON serialization."""
    canon = json.dumps(model_to_json(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def forward(model: DecoderModel, x, z) -> np.ndarray:
    """Evaluate the network at one (x, z) pair."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    first = model.layers[0]
    if x.shape[0] != model.x_dim or z.shape[0] != model.z_dim:
        raise ValueError(
            f"expected x of length {model.x_dim} and z of length {model.z_dim}, "
            f"got {x.shape[0]} and {z.shape[0]}"
        )
    Wx, Wz = model.first_layer_split
    h = Wx @ x + Wz @ z + first.b
    for layer in model.layers[1:]:
        if isinstance(layer, ReluLayer):
            h = np.maximum(h, 0.0)
        else:
            h = layer.W @ h + layer.b
    return h


def forward_batch(model: DecoderModel, x, Z: np.ndarray) -> np.ndarray:
    """Evaluate at a fixed x for a batch of latents; Z has shape (n, z_dim).

    Returns an array of shape (n, out_dim).
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    Z = np.asarray(Z, dtype=np.float64)
    first = model.layers[0]
    Wx, Wz = model.first_layer_split
    H = Z @ Wz.T + (Wx @ x + first.b)
    for layer in model.layers[1:]:
        if isinstance(layer, ReluLayer):
            H = np.maximum(H, 0.0)
        else:
            H = H @ layer.W.T + layer.b
    return H
