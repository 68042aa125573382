"""Flat-array packing of a verification problem for the numeric kernels.

The kernels (numba or numpy backend) operate on a single tuple of plain
arrays so the same code path serves both.  Tuple layout, in order:

    0  n_layers   int      number of linear layers K
    1  z_dim      int      latent dimension
    2  in_dims    i8[K]    input width of each linear layer (0: conditioning)
    3  out_dims   i8[K]    output width of each linear layer
    4  w_flat     f8[:]    W_k row-major, concatenated
    5  w_abs      f8[:]    |W_k|, same layout
    6  wt_flat    f8[:]    W_k^T row-major, concatenated
    7  wt_abs     f8[:]    |W_k^T|
    8  w_off      i8[K+1]  offsets into the four weight buffers
    9  b_flat     f8[:]    biases, concatenated (segment layout below)
    10 wz         f8[:]    latent block of layer 0, row-major (out0 x z_dim)
    11 wz_abs     f8[:]
    12 wzt        f8[:]    transposed latent block (z_dim x out0)
    13 wzt_abs    f8[:]
    14 c          f8[:]    specification coefficients (fixed final multiplier)
    15 d          float    specification offset
    16 l0         f8[:]    free-box lower bound
    17 u0         f8[:]    free-box upper bound
    18 seg_off    i8[K+1]  per-linear-layer segment offsets (sizes out_dims)

Segments index everything whose size is "one value per linear-layer output":
biases, pre-activation interval bounds, multiplier vectors, argmax records.
The free multipliers occupy segments 0..K-2 (length seg_off[K-1]); the final
segment is pinned to c.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import LinearLayer
from .specs import VerificationProblem


@dataclass(frozen=True)
class PackedProblem:
    tup: tuple
    n_layers: int
    z_dim: int
    cond_dim: int
    out_dims: np.ndarray
    seg_off: np.ndarray

    @property
    def lam_free_size(self) -> int:
        return int(self.seg_off[self.n_layers - 1])

    @property
    def seg_size(self) -> int:
        return int(self.seg_off[self.n_layers])

    def lam_segments(self, lam_free: np.ndarray) -> list[np.ndarray]:
        off = self.seg_off
        return [lam_free[off[k] : off[k + 1]] for k in range(self.n_layers - 1)]

    def pack_duals(self, lambdas) -> np.ndarray:
        if len(lambdas) != self.n_layers - 1:
            raise ValueError(
                f"expected {self.n_layers - 1} multiplier vectors, got {len(lambdas)}"
            )
        if self.n_layers == 1:
            return np.zeros(0)
        parts = []
        for k, lam in enumerate(lambdas):
            lam = np.asarray(lam, dtype=np.float64)
            want = self.seg_off[k + 1] - self.seg_off[k]
            if lam.shape != (want,):
                raise ValueError(f"multiplier {k} has shape {lam.shape}, expected ({want},)")
            parts.append(lam)
        return np.concatenate(parts)

    def bound_segments(self, flat: np.ndarray) -> list[np.ndarray]:
        off = self.seg_off
        return [flat[off[k] : off[k + 1]] for k in range(self.n_layers)]


def pack_problem(problem: VerificationProblem) -> PackedProblem:
    net = problem.network
    linears = [l for l in net.layers if isinstance(l, LinearLayer)]
    K = len(linears)
    cond = net.x_dim

    in_dims = np.empty(K, dtype=np.int64)
    out_dims = np.empty(K, dtype=np.int64)
    in_dims[0] = cond
    for k, layer in enumerate(linears):
        out_dims[k] = layer.W.shape[0]
        if k + 1 < K:
            in_dims[k + 1] = layer.W.shape[0]

    W0 = linears[0].W
    Wx0 = np.ascontiguousarray(W0[:, :cond])
    Wz0 = np.ascontiguousarray(W0[:, cond:])
    mats = [Wx0] + [l.W for l in linears[1:]]

    w_off = np.zeros(K + 1, dtype=np.int64)
    for k, m in enumerate(mats):
        w_off[k + 1] = w_off[k] + m.size
    w_flat = np.concatenate([np.ascontiguousarray(m).ravel() for m in mats])
    wt_flat = np.concatenate([np.ascontiguousarray(m.T).ravel() for m in mats])

    seg_off = np.zeros(K + 1, dtype=np.int64)
    np.cumsum(out_dims, out=seg_off[1:])
    b_flat = np.concatenate([l.b for l in linears])

    tup = (
        K,
        net.z_dim,
        in_dims,
        out_dims,
        w_flat,
        np.abs(w_flat),
        wt_flat,
        np.abs(wt_flat),
        w_off,
        b_flat,
        Wz0.ravel().copy(),
        np.abs(Wz0).ravel().copy(),
        np.ascontiguousarray(Wz0.T).ravel(),
        np.abs(np.ascontiguousarray(Wz0.T)).ravel(),
        problem.c.copy(),
        float(problem.d),
        problem.free_box.lower.copy(),
        problem.free_box.upper.copy(),
        seg_off,
    )
    return PackedProblem(
        tup=tup,
        n_layers=K,
        z_dim=net.z_dim,
        cond_dim=cond,
        out_dims=out_dims,
        seg_off=seg_off,
    )
