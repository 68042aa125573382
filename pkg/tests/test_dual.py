import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probcert import (
    Box,
    DualVariables,
    LatentBox,
    assemble_bound,
    box_complement_probability,
    build_bounded_above,
    dual_value_at,
    dual_value_deterministic,
    forward,
    gaussian_tail,
    input_term,
    latent_coefficient,
    propagate,
    relu_conjugate_max,
)
from probcert.model import DecoderModel, LinearLayer
from conftest import pass_through_model, random_network

# frozen from high-precision normal CDF evaluation
PHI_MINUS_1 = 0.15865525393145707
TWO_PHI_MINUS_2 = 0.04550026389635839


def random_duals(rng, problem, scale=0.5):
    linears = problem.network.linear_layers
    return DualVariables(
        tuple(scale * rng.standard_normal(l.W.shape[0]) for l in linears[:-1])
    )


class TestReluConjugateMax:
    def test_simple_cases(self):
        assert relu_conjugate_max(1.0, 0.0, -1.0, 1.0) == 1.0
        assert relu_conjugate_max(5.0, 2.0, -3.0, -1.0) == 6.0

    def test_against_grid_oracle(self):
        # dense grid maximization over [-2, 3]
        xs = np.linspace(-2.0, 3.0, 500_001)
        vals = 2.0 * np.maximum(xs, 0.0) - 1.0 * xs
        assert relu_conjugate_max(2.0, 1.0, -2.0, 3.0) == pytest.approx(vals.max(), abs=1e-9)
        assert relu_conjugate_max(2.0, 1.0, -2.0, 3.0) == 3.0

    def test_rejects_inverted_interval(self):
        with pytest.raises(ValueError):
            relu_conjugate_max(1.0, 1.0, 1.0, 0.0)

    @given(
        nu=st.floats(-10, 10),
        lam=st.floats(-10, 10),
        l=st.floats(-5, 5),
        width=st.floats(0, 5),
        seed=st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=200, deadline=None)
    def test_dominates_every_feasible_point(self, nu, lam, l, width, seed):
        u = l + width
        best = relu_conjugate_max(nu, lam, l, u)
        xs = np.random.default_rng(seed).uniform(l, u, size=1000)
        vals = nu * np.maximum(xs, 0.0) - lam * xs
        assert best >= vals.max() - 1e-9


class TestInputTerm:
    def test_unit_box(self):
        assert input_term(np.array([1.0, -1.0]), np.zeros(2), np.ones(2)) == 1.0

    def test_zero_coefficient(self):
        rng = np.random.default_rng(30)
        lo = rng.uniform(-5, 0, 4)
        hi = lo + rng.uniform(0, 5, 4)
        assert input_term(np.zeros(4), lo, hi) == 0.0

    def test_against_vertex_enumeration(self):
        rng = np.random.default_rng(31)
        nu = rng.standard_normal(5)
        lo = rng.uniform(-2, 0, 5)
        hi = lo + rng.uniform(0, 3, 5)
        best = -np.inf
        for mask in range(32):
            v = np.where([(mask >> i) & 1 for i in range(5)], hi, lo)
            best = max(best, float(nu @ v))
        assert input_term(nu, lo, hi) == pytest.approx(best, rel=1e-12)


class TestLatentCoefficient:
    def test_identity_latent_block_returns_first_multiplier(self):
        from probcert.model import ReluLayer

        W0 = np.hstack([np.zeros((2, 1)), np.eye(2)])
        model = DecoderModel(
            1,
            2,
            (
                LinearLayer(W0, np.zeros(2)),
                ReluLayer(),
                LinearLayer(np.array([[1.0, 1.0]]), np.zeros(1)),
            ),
        )
        prob = build_bounded_above(model, 1.0, Box([0.0], [1.0]), 0.1)
        lam0 = np.array([0.4, -1.7])
        np.testing.assert_allclose(
            latent_coefficient(prob, DualVariables((lam0,))), lam0, rtol=0
        )

    def test_single_layer_coefficient_is_latent_block_on_c(self):
        prob = build_bounded_above(
            DecoderModel(1, 2, (LinearLayer(np.array([[0.0, 1.0, 2.0]]), np.zeros(1)),)),
            1.0,
            Box([0.0], [1.0]),
            0.1,
        )
        np.testing.assert_allclose(latent_coefficient(prob, DualVariables(())), [1.0, 2.0])

    def test_zero_duals_give_zero(self):
        rng = np.random.default_rng(32)
        model = random_network(rng, hidden=(5, 4))
        prob = build_bounded_above(model, 1.0, Box([0.0], [1.0]), 0.1)
        duals = DualVariables(tuple(np.zeros(l.W.shape[0]) for l in model.linear_layers[:-1]))
        np.testing.assert_allclose(latent_coefficient(prob, duals), np.zeros(1))

    def test_matches_dual_value_differences(self):
        # zeta recovered by finite-differencing G in z
        rng = np.random.default_rng(33)
        model = random_network(rng, z_dim=2, hidden=(6, 5))
        prob = build_bounded_above(model, 0.5, Box([0.0], [1.0]), 0.1)
        latent = LatentBox.symmetric(2, 2.0)
        bounds = propagate(prob, latent)
        duals = random_duals(rng, prob)
        zeta = latent_coefficient(prob, duals)
        for _ in range(10):
            z1, z2 = rng.standard_normal(2), rng.standard_normal(2)
            diff = dual_value_at(prob, duals, bounds, z1) - dual_value_at(
                prob, duals, bounds, z2
            )
            assert diff == pytest.approx(float(zeta @ (z1 - z2)), rel=1e-9, abs=1e-12)


class TestDualValue:
    def test_pass_through_closed_form(self):
        prob = build_bounded_above(pass_through_model(), 2.0, Box([0.0], [1.0]), 0.1)
        latent = LatentBox.symmetric(1, 3.0)
        bounds = propagate(prob, latent)
        duals = DualVariables(())
        assert dual_value_deterministic(prob, duals, bounds) == pytest.approx(-2.0, abs=0)
        np.testing.assert_allclose(latent_coefficient(prob, duals), [1.0])

    def test_g_is_value_at_zero_latent(self):
        rng = np.random.default_rng(34)
        model = random_network(rng, z_dim=2, hidden=(5,))
        prob = build_bounded_above(model, 0.0, Box([0.0], [1.0]), 0.1)
        latent = LatentBox.symmetric(2, 2.0)
        bounds = propagate(prob, latent)
        duals = random_duals(rng, prob)
        g = dual_value_deterministic(prob, duals, bounds)
        assert dual_value_at(prob, duals, bounds, np.zeros(2)) == pytest.approx(g, abs=0)

    def test_affine_in_z(self):
        rng = np.random.default_rng(35)
        model = random_network(rng, z_dim=3, hidden=(6, 4))
        prob = build_bounded_above(model, 0.0, Box([0.0], [1.0]), 0.1)
        latent = LatentBox.symmetric(3, 2.0)
        bounds = propagate(prob, latent)
        duals = random_duals(rng, prob)
        z1, z2 = rng.standard_normal(3), rng.standard_normal(3)
        lhs = (
            dual_value_at(prob, duals, bounds, z1)
            + dual_value_at(prob, duals, bounds, z2)
            - 2.0 * dual_value_at(prob, duals, bounds, (z1 + z2) / 2.0)
        )
        assert lhs == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("trial", range(5))
    def test_weak_duality_sampling(self, trial):
        rng = np.random.default_rng(100 + trial)
        model = random_network(
            rng, x_dim=2, z_dim=2, hidden=(6, 5) if trial % 2 else (8,), scale=0.9
        )
        prob = build_bounded_above(model, rng.uniform(-1, 1), Box([-1.0, 0.0], [1.0, 1.0]), 0.1)
        latent = LatentBox.from_bounds([-2.0, -1.0], [1.5, 2.0])
        bounds = propagate(prob, latent)
        duals = random_duals(rng, prob)
        for _ in range(1000):
            u = rng.uniform(prob.free_box.lower, prob.free_box.upper)
            z = rng.uniform(latent.alpha, latent.beta)
            primal = prob.c @ forward(prob.network, u, z) + prob.d
            assert dual_value_at(prob, duals, bounds, z) >= primal - 1e-9


class TestGaussianTail:
    def test_symmetric_point(self):
        assert gaussian_tail(0.0, 2.7) == pytest.approx(0.5, abs=1e-15)

    def test_degenerate_branch(self):
        assert gaussian_tail(-0.1, 0.0) == 0.0
        assert gaussian_tail(0.0, 0.0) == 1.0
        assert gaussian_tail(0.2, 1e-13) == 1.0

    def test_unit_case_frozen_value(self):
        assert gaussian_tail(-1.0, 1.0) == pytest.approx(PHI_MINUS_1, rel=1e-12)

    def test_rejects_negative_norm(self):
        with pytest.raises(ValueError):
            gaussian_tail(0.0, -1.0)

    @given(
        g1=st.floats(-30, 30),
        g2=st.floats(-30, 30),
        s=st.floats(1e-6, 100),
    )
    @settings(max_examples=300, deadline=None)
    def test_monotone_in_g_and_bounded(self, g1, g2, s):
        lo_g, hi_g = min(g1, g2), max(g1, g2)
        p_lo = gaussian_tail(lo_g, s)
        p_hi = gaussian_tail(hi_g, s)
        assert 0.0 <= p_lo <= p_hi <= 1.0


class TestBoxComplement:
    def test_full_support(self):
        assert box_complement_probability(
            LatentBox.from_bounds([-40.0, -40.0], [40.0, 40.0])
        ) == pytest.approx(0.0, abs=1e-15)

    def test_one_dim_frozen_value(self):
        assert box_complement_probability(
            LatentBox.from_bounds([-2.0], [2.0])
        ) == pytest.approx(TWO_PHI_MINUS_2, rel=1e-12)

    def test_independence_identity(self):
        q = box_complement_probability(LatentBox.from_bounds([-1.3], [0.7]))
        q2 = box_complement_probability(LatentBox.from_bounds([-1.3, -1.3], [0.7, 0.7]))
        assert q2 == pytest.approx(1.0 - (1.0 - q) ** 2, rel=1e-12)


class TestAssembleBound:
    def test_pass_through_anchor(self):
        prob = build_bounded_above(pass_through_model(), 2.326348, Box([0.0], [1.0]), 0.01)
        latent = LatentBox.from_bounds([-8.0], [8.0])
        cert = assemble_bound(prob, DualVariables(()), latent)
        # exact violation probability is 0.0100; the wide box adds ~1e-15
        assert cert.erfc_term == pytest.approx(0.01, abs=2e-8)
        assert cert.bound == pytest.approx(0.01, abs=1e-7)

    def test_empty_interior_box_is_vacuous(self):
        rng = np.random.default_rng(36)
        model = random_network(rng, hidden=(5,))
        prob = build_bounded_above(model, 0.0, Box([0.0], [1.0]), 0.1)
        latent = LatentBox(np.array([0.5]), np.array([0.0]))
        cert = assemble_bound(prob, random_duals(rng, prob), latent)
        assert cert.tail_term == pytest.approx(1.0, abs=0)
        assert cert.bound == 1.0

    def test_monotone_in_d(self):
        rng = np.random.default_rng(37)
        model = random_network(rng, hidden=(6, 5))
        latent = LatentBox.symmetric(1, 2.0)
        duals = None
        prev_bound = None
        prev_g = None
        for a in np.linspace(2.0, -2.0, 9):  # increasing d = -a
            prob = build_bounded_above(model, a, Box([0.0], [1.0]), 0.1)
            if duals is None:
                duals = random_duals(rng, prob)
            cert = assemble_bound(prob, duals, latent)
            if prev_g is not None:
                assert cert.g_value - prev_g == pytest.approx(0.5, rel=1e-9)
                assert cert.bound >= prev_bound - 1e-15
            prev_bound, prev_g = cert.bound, cert.g_value

    def test_bound_components_consistent(self):
        rng = np.random.default_rng(38)
        model = random_network(rng, z_dim=2, hidden=(7, 5))
        prob = build_bounded_above(model, 1.0, Box([0.0], [1.0]), 0.1)
        latent = LatentBox.symmetric(2, 3.0)
        cert = assemble_bound(prob, random_duals(rng, prob), latent)
        assert cert.bound == pytest.approx(
            min(1.0, cert.erfc_term + cert.tail_term), abs=1e-15
        )
        assert 0.0 <= cert.erfc_term <= 1.0
        assert 0.0 <= cert.tail_term <= 1.0

    def test_certificate_json_round_trip(self, tmp_path):
        from probcert.dual import Certificate

        rng = np.random.default_rng(39)
        model = random_network(rng, hidden=(5,))
        prob = build_bounded_above(model, 1.0, Box([0.0], [1.0]), 0.1)
        cert = assemble_bound(prob, random_duals(rng, prob), LatentBox.symmetric(1, 3.0))
        path = tmp_path / "cert.json"
        cert.save(path)
        back = Certificate.load(path)
        assert back.bound == cert.bound
        assert back.g_value == cert.g_value
        assert back.model_digest == cert.model_digest
        np.testing.assert_array_equal(back.alpha, cert.alpha)
