"""The numba and numpy kernel backends must agree on every code path."""

import numpy as np
import pytest

from probcert import Box, LatentBox, build_bounded_above, build_midpoint_convexity
from probcert.packing import pack_problem
from conftest import pass_through_model, random_network

numba_backend = pytest.importorskip("probcert.kernels._numba")
from probcert.kernels import _numpy as numpy_backend  # noqa: E402


def instances():
    rng = np.random.default_rng(60)
    out = []
    for trial in range(6):
        if trial == 0:
            prob = build_bounded_above(pass_through_model(), 1.3, Box([0.0], [1.0]), 0.1)
        elif trial % 2:
            model = random_network(rng, z_dim=2, hidden=(7, 5), scale=0.9)
            prob = build_bounded_above(model, rng.uniform(-1, 1), Box([0.0], [1.0]), 0.1)
        else:
            model = random_network(rng, hidden=(5, 4), scale=0.8)
            prob = build_midpoint_convexity(model, Box([0.0], [1.0]), None, 0.1)
        packed = pack_problem(prob)
        z = packed.z_dim
        lam = 0.4 * rng.standard_normal(packed.lam_free_size)
        alpha = rng.uniform(-3, -1, z)
        eta = rng.uniform(0.5, 2.5, z)
        out.append((packed, lam, alpha, eta))
    return out


@pytest.mark.parametrize("idx", range(6))
def test_ibp_bounds_agree(idx):
    packed, lam, alpha, eta = instances()[idx]
    beta = alpha + eta * eta
    l_nb, u_nb = numba_backend.ibp_bounds(packed.tup, alpha, beta)
    l_np, u_np = numpy_backend.ibp_bounds(packed.tup, alpha, beta)
    np.testing.assert_allclose(l_nb, l_np, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(u_nb, u_np, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("idx", range(6))
def test_dual_terms_agree(idx):
    packed, lam, alpha, eta = instances()[idx]
    beta = alpha + eta * eta
    l_flat, u_flat = numpy_backend.ibp_bounds(packed.tup, alpha, beta)
    lam_all = np.concatenate([lam, packed.tup[14]])
    g_nb, zeta_nb, x0_nb, xs_nb, code_nb = numba_backend.dual_terms(
        packed.tup, l_flat, u_flat, lam_all
    )
    g_np, zeta_np, x0_np, xs_np, code_np = numpy_backend.dual_terms(
        packed.tup, l_flat, u_flat, lam_all
    )
    assert g_nb == pytest.approx(g_np, rel=1e-12, abs=1e-14)
    np.testing.assert_allclose(zeta_nb, zeta_np, rtol=1e-12, atol=1e-14)
    np.testing.assert_array_equal(x0_nb, x0_np)
    np.testing.assert_array_equal(xs_nb, xs_np)
    np.testing.assert_array_equal(code_nb, code_np)


@pytest.mark.parametrize("idx", range(6))
def test_objective_and_gradients_agree(idx):
    packed, lam, alpha, eta = instances()[idx]
    out_nb = numba_backend.objective_grad(packed.tup, lam, alpha, eta)
    out_np = numpy_backend.objective_grad(packed.tup, lam, alpha, eta)
    for a, b in zip(out_nb[:5], out_np[:5]):
        assert a == pytest.approx(b, rel=1e-11, abs=1e-13)
    for a, b in zip(out_nb[5:], out_np[5:]):
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-13)


def test_backend_flag_selects_numpy(monkeypatch):
    import subprocess
    import sys

    code = (
        "import probcert.kernels as k; print(k.BACKEND_NAME)"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        env={"PROBCERT_BACKEND": "numpy", "PATH": "/usr/bin:/bin"},
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "numpy"
