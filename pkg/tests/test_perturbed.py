import numpy as np
import pytest

from htbif.errors import (
    DegenerateError,
    DomainError,
    GridMismatchError,
    PositivityError,
)
from htbif.model import CoeffFn, ModelParams, Profile, w0_const
from htbif.nodal import crossing_count, nodal_pair
from htbif.perturbed import (
    census,
    constant_states,
    continue_in_eps,
    first_order_corrections,
    newton_solve,
    residual,
    residual_fine,
)
from htbif.spectral import lambda_roots


@pytest.fixture
def flat_v(desk):
    return Profile.constant(desk.mu / desk.d, 2001)


class TestResidual:
    def test_constant_state_is_exact_zero(self, desk, flat_v):
        g1, g2 = residual(Profile.constant(w0_const(desk), 2001), flat_v, desk)
        assert float(np.max(np.abs(g1.values))) < 1e-10
        assert float(np.max(np.abs(g2.values))) < 1e-10

    def test_nodal_seed_truncation_refines_at_second_order(self, desk):
        sups = []
        for n_pts in (1001, 2001, 4001):
            lower, _ = nodal_pair(1, desk, n_pts)
            g1, _ = residual(lower.profile, Profile.constant(50.0, n_pts), desk)
            sups.append(float(np.max(np.abs(g1.values))))
        assert sups[0] / sups[1] == pytest.approx(4.0, rel=0.2)
        assert sups[1] / sups[2] == pytest.approx(4.0, rel=0.2)

    def test_nodal_seed_residual_on_fine_grid(self, desk):
        # consistency of the discretization: the integrated profile plugged
        # into the discrete operator leaves truncation plus the float64
        # quantization floor 2 eps |w| / h^2 (so refining beyond the optimal
        # grid makes the sup grow again; 4001 points stays truncation-bound)
        lower, _ = nodal_pair(1, desk, 4001)
        g1, _ = residual(lower.profile, Profile.constant(50.0, 4001), desk)
        assert float(np.max(np.abs(g1.values))) < 1e-6

    def test_zero_predator_is_invariant(self, desk):
        w = Profile.constant(0.7, 501)
        v = Profile.constant(0.0, 501)
        _, g2 = residual(w, v, desk.with_eps(1e-2))
        assert float(np.max(np.abs(g2.values))) == 0.0

    def test_grid_mismatch(self, desk):
        with pytest.raises(GridMismatchError):
            residual(Profile.constant(1.0, 501), Profile.constant(1.0, 1001), desk)


class TestNewtonSolve:
    def test_exact_constant_fixed_point(self, desk, flat_v):
        state = newton_solve(Profile.constant(w0_const(desk), 2001), flat_v, desk, origin="constant")
        assert state.newton_iters <= 1
        assert state.residual_sup < 1e-9
        assert np.allclose(state.w.values, w0_const(desk), atol=1e-12)

    def test_perturbation_distance_scales_with_eps(self, desk, flat_v):
        lower, _ = nodal_pair(1, desk)
        state = newton_solve(lower.profile, flat_v, desk.with_eps(1e-3), origin="nodal(1,lower)")
        gap = float(np.max(np.abs(state.w.values - lower.profile.values)))
        assert state.residual_sup < 1e-9
        assert 1e-5 < gap < 1e-3  # O(eps) with a moderate constant

    def test_predator_becomes_inhomogeneous_from_nodal_seed(self, desk, flat_v):
        lower, _ = nodal_pair(1, desk)
        state = newton_solve(lower.profile, flat_v, desk.with_eps(1e-3))
        assert float(np.ptp(state.v.values)) > 1e-5

    def test_constant_seed_stays_constant_at_positive_eps(self, desk, flat_v):
        # with constant coefficients the continued ground state is constant
        state = newton_solve(Profile.constant(w0_const(desk), 2001), flat_v, desk.with_eps(1e-3))
        assert float(np.ptp(state.w.values)) < 1e-12
        assert float(np.ptp(state.v.values)) < 1e-12

    def test_residual_fine_reproduces_certificate(self, desk, flat_v):
        lower, _ = nodal_pair(1, desk)
        q = desk.with_eps(1e-3)
        state = newton_solve(lower.profile, flat_v, q)
        assert residual_fine(state, q) == pytest.approx(state.residual_sup, rel=1e-6)
        assert residual_fine(state, q) < 1e-9

    def test_semitrivial_state_is_preserved(self, desk, flat_v):
        q = desk.with_eps(1e-3)
        with pytest.raises(PositivityError) as err:
            newton_solve(Profile.constant(0.0, 2001), flat_v, q)
        assert float(np.max(np.abs(err.value.w.values))) == 0.0
        assert err.value.residual_sup < 1e-9

    def test_quadratic_contraction(self, desk, flat_v):
        # push the seed far enough that several iterations happen, then the
        # residual sequence must contract at least quadratically at the end
        lower, _ = nodal_pair(1, desk)
        q = desk.with_eps(5e-2)
        history = []
        state = newton_solve(lower.profile, flat_v, q, residual_history=history)
        assert state.residual_sup < 1e-9
        assert state.newton_iters >= 3
        tail = [r for r in history if r > 1e-13]
        for prev, nxt in zip(tail[-3:], tail[-2:]):
            # quadratic decay until the banded-solve floor below tolerance
            assert nxt <= max(10.0 * prev * prev, 1e-10)


class TestFirstOrderCorrections:
    def test_predator_correction_positive(self, desk):
        lower, _ = nodal_pair(1, desk)
        phi, psi = first_order_corrections(lower, desk)
        assert float(np.min(psi.values)) > 0.0
        assert phi.n_points == 2001

    def test_zero_conversion_kills_psi(self, desk):
        p = ModelParams(coeff_c=CoeffFn.constant(0.0))
        lower, _ = nodal_pair(1, p)
        phi, psi = first_order_corrections(lower, p)
        assert float(np.max(np.abs(psi.values))) == 0.0
        assert float(np.max(np.abs(phi.values))) > 0.0

    def test_refuses_near_degenerate_point(self, desk):
        root = lambda_roots(1, desk)
        q = desk.with_lam(root.lambda_minus + 2e-7)
        lower, _ = nodal_pair(1, q)
        with pytest.raises(DegenerateError):
            first_order_corrections(lower, q)

    def test_constant_state_corrections_match_algebraic_path(self, desk):
        # dual route: at the constant state the corrections have closed forms
        # psi = c w0/(d (1+w0)) and phi from the 2x2 algebraic system, whose
        # eps-derivative constant_states exposes by finite differences
        w0 = w0_const(desk)
        phi, psi = first_order_corrections(Profile.constant(w0, 2001), desk)
        psi_exact = w0 / (desk.d * (1.0 + w0))
        assert np.allclose(psi.values, psi_exact, atol=1e-10)
        eps = 1e-7
        (w_eps, v_eps), = [s for s in constant_states(desk.with_eps(eps)) if abs(s[0] - w0) < 0.1]
        assert np.allclose(phi.values, (w_eps - w0) / eps, atol=1e-5)
        assert np.allclose(psi.values, (v_eps - desk.mu / desk.d) / eps, atol=1e-5)

    def test_richardson_first_order(self, desk, flat_v):
        lower, _ = nodal_pair(1, desk)
        base = newton_solve(lower.profile, flat_v, desk, origin="nodal(1,lower)")
        phi, _ = first_order_corrections(base, desk)
        gaps = []
        for eps in (1e-2, 5e-3, 2.5e-3):
            st = newton_solve(base.w, flat_v, desk.with_eps(eps))
            gaps.append(float(np.max(np.abs((st.w.values - base.w.values) / eps - phi.values))))
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[0] / gaps[1] == pytest.approx(2.0, rel=0.2)


class TestCensus:
    def test_unperturbed_census_matches_seeds(self, desk):
        result = census(1, desk)
        assert result.distinct_count == 3
        assert not result.shortfall
        assert {s.origin for s in result.states} == {"constant", "nodal(1,lower)", "nodal(1,upper)"}
        assert all(s.newton_iters <= 1 for s in result.states)

    def test_perturbed_census(self, desk):
        q = desk.with_eps(1e-3)
        result = census(1, q)
        assert result.distinct_count == 3 and not result.shortfall
        w0 = w0_const(desk)
        expected = {"constant": 0, "nodal(1,lower)": 1, "nodal(1,upper)": 1}
        for s in result.states:
            assert s.residual_sup < 1e-9
            assert float(np.min(s.w.values)) > 0.0 and float(np.min(s.v.values)) > 0.0
            assert crossing_count(s.w.values, w0) == expected[s.origin]

    def test_rejects_mode_above_kappa(self, desk):
        with pytest.raises(DomainError):
            census(2, desk)

    def test_rejects_lambda_outside_window(self, desk):
        with pytest.raises(DomainError):
            census(1, desk.with_lam(5.0))

    def test_rejects_lambda_in_next_window(self):
        p = ModelParams(mu=170.0, lam=85.0)  # inside both windows
        with pytest.raises(DomainError, match="mode-2"):
            census(1, p)

    def test_census_in_two_mode_regime(self):
        p = ModelParams(mu=170.0, lam=30.0)  # inside window 1, outside window 2
        result = census(1, p)
        assert result.distinct_count == 3

    def test_full_census_at_kappa_two(self):
        # lam inside the mode-2 window is admissible for the n = 2 census
        p = ModelParams(mu=170.0, lam=85.0, eps=1e-4)
        result = census(2, p, n_points=1001)
        assert result.distinct_count == 5
        assert not result.shortfall


class TestContinueInEps:
    def test_same_target_is_identity(self, desk, flat_v):
        state = newton_solve(Profile.constant(w0_const(desk), 2001), flat_v, desk, origin="constant")
        out = continue_in_eps(state, desk, 0.0)
        assert len(out.states) == 1 and out.states[0] is state
        assert out.breakdown is None

    def test_small_ladder_converges(self, desk, flat_v):
        lower, _ = nodal_pair(1, desk)
        start = newton_solve(lower.profile, flat_v, desk, origin="nodal(1,lower)")
        out = continue_in_eps(start, desk, 1e-3, steps=4)
        assert out.breakdown is None
        assert len(out.states) == 5
        assert all(s.residual_sup < 1e-9 for s in out.states)
        assert out.last_good_eps == pytest.approx(1e-3)

    def test_breakdown_reported_not_raised(self, desk, flat_v):
        # far beyond the perturbation range the prey state collapses and
        # Newton loses the nodal structure; the ladder must stop gracefully
        lower, _ = nodal_pair(1, desk)
        start = newton_solve(lower.profile, flat_v, desk, origin="nodal(1,lower)")
        out = continue_in_eps(start, desk, 50.0, steps=10)
        if out.breakdown is not None:
            assert "eps" in out.breakdown
            assert out.last_good_eps < 50.0
        else:  # if every rung converged the end state must be a true solution
            assert out.states[-1].residual_sup < 1e-9


class TestConstantStates:
    def test_limit_case(self, desk):
        states = constant_states(desk)
        assert len(states) == 1
        w, v = states[0]
        assert w == pytest.approx(w0_const(desk), abs=1e-12)
        assert v == pytest.approx(desk.mu / desk.d, abs=1e-12)

    def test_empty_outside_window(self, desk):
        assert constant_states(desk.with_lam(60.0)) == []

    def test_small_eps_perturbs_at_first_order(self, desk):
        states = constant_states(desk.with_eps(1e-4))
        near = [s for s in states if abs(s[0] - 1.0) < 0.1]
        assert len(near) == 1
        w, v = near[0]
        assert abs(w - 1.0) < 5e-4
        assert abs(v - 50.0) < 5e-3

    def test_requires_constant_coefficients(self, desk):
        p = ModelParams(coeff_a=CoeffFn.sampled([0.0, 1.0], [1.0, 2.0]))
        with pytest.raises(DomainError):
            constant_states(p)
