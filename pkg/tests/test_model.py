import math

import numpy as np
import pytest

from htbif.errors import DomainError
from htbif.model import (
    CoeffFn,
    ModelParams,
    PhaseState,
    Profile,
    energy,
    kinetic_d2f,
    kinetic_d3f,
    kinetic_df,
    kinetic_f,
    potential_F,
    potential_gap,
    w0_const,
)


class TestCoeffFn:
    def test_constant(self):
        c = CoeffFn.constant(2.5)
        assert c.is_constant
        assert c(0.3) == 2.5
        assert np.all(c(np.linspace(0, 1, 5)) == 2.5)

    def test_sampled_interpolates(self):
        c = CoeffFn.sampled([0.0, 0.5, 1.0], [1.0, 3.0, 1.0])
        assert c(0.25) == pytest.approx(2.0)
        assert c(1.0) == 1.0

    @pytest.mark.parametrize(
        "xs, ys",
        [
            ([0.0, 1.0], [0.0, 0.0]),      # identically zero
            ([0.0, 1.0], [1.0, -0.5]),     # negative value
            ([0.1, 1.0], [1.0, 1.0]),      # does not start at 0
            ([0.0, 0.5], [1.0, 1.0]),      # does not end at 1
            ([0.0, 0.5, 0.5, 1.0], [1.0, 1.0, 1.0, 1.0]),  # not strictly ascending
        ],
    )
    def test_sampled_rejects(self, xs, ys):
        with pytest.raises(DomainError):
            CoeffFn.sampled(xs, ys)

    def test_constant_rejects_negative(self):
        with pytest.raises(DomainError):
            CoeffFn.constant(-1.0)

    def test_from_csv(self, tmp_path):
        path = tmp_path / "coeff.csv"
        path.write_text("x,value\r\n0,1.0\r\n0.5,2.0\r\n1,1.5\r\n", encoding="utf-8")
        c = CoeffFn.from_csv(path)
        assert c(0.25) == pytest.approx(1.5)

    def test_from_spec(self, tmp_path):
        assert CoeffFn.from_spec("const:3").value == 3.0
        path = tmp_path / "c.csv"
        path.write_text("0,1\n1,1\n")
        assert not CoeffFn.from_spec(f"csv:{path}").is_constant
        with pytest.raises(DomainError):
            CoeffFn.from_spec("nope:1")


class TestModelParams:
    def test_defaults_are_desk_scale(self, desk):
        assert (desk.b, desk.d, desk.lam, desk.mu, desk.eps) == (1.0, 1.0, 25.0, 50.0, 0.0)

    @pytest.mark.parametrize("kwargs", [dict(b=0.0), dict(d=-1.0), dict(eps=-1e-9), dict(b=math.nan)])
    def test_rejects_bad_scalars(self, kwargs):
        with pytest.raises(DomainError):
            ModelParams(**kwargs)

    def test_with_lam_and_eps(self, desk):
        q = desk.with_lam(10.0).with_eps(0.5)
        assert (q.lam, q.eps) == (10.0, 0.5)
        assert (desk.lam, desk.eps) == (25.0, 0.0)


class TestProfile:
    def test_grid(self):
        prof = Profile([1.0, 2.0, 3.0])
        assert prof.n_points == 3
        assert prof.h == 0.5
        assert np.allclose(prof.x, [0.0, 0.5, 1.0])

    def test_rejects_even_and_short(self):
        with pytest.raises(DomainError):
            Profile([1.0, 2.0])
        with pytest.raises(DomainError):
            Profile([1.0, 2.0, 3.0, 4.0])

    def test_values_read_only(self):
        prof = Profile.constant(1.0, 5)
        with pytest.raises(ValueError):
            prof.values[0] = 2.0


def test_phase_state_domain():
    PhaseState(0.0, 1.0)
    with pytest.raises(DomainError):
        PhaseState(-1.0, 0.0)


class TestW0Const:
    def test_midpoint_value(self):
        # lam = b*mu/(2d) forces the constant state to equal 1
        assert w0_const(ModelParams(lam=25.0, mu=50.0)) == 1.0

    def test_direct_evaluation(self):
        assert w0_const(ModelParams(lam=10.0, mu=50.0)) == 4.0

    def test_window_boundary_raises(self):
        with pytest.raises(DomainError):
            w0_const(ModelParams(lam=50.0, mu=50.0))
        with pytest.raises(DomainError):
            w0_const(ModelParams(lam=-1.0, mu=50.0))


class TestKinetics:
    def test_zeros_of_f(self, desk):
        assert kinetic_f(0.0, desk) == 0.0
        assert kinetic_f(w0_const(desk), desk) == pytest.approx(0.0, abs=1e-14)

    def test_df_at_zero(self, desk):
        assert kinetic_df(0.0, desk) == -25.0

    def test_domain(self, desk):
        with pytest.raises(DomainError):
            kinetic_f(-1.0, desk)
        with pytest.raises(DomainError):
            potential_F(np.array([0.5, -2.0]), desk)

    def test_derivatives_match_finite_differences(self, desk):
        rng = np.random.default_rng(7)
        w = rng.uniform(-0.5, 5.0, size=40)
        h = 1e-6
        fd1 = (kinetic_f(w + h, desk) - kinetic_f(w - h, desk)) / (2 * h)
        fd2 = (kinetic_df(w + h, desk) - kinetic_df(w - h, desk)) / (2 * h)
        fd3 = (kinetic_d2f(w + h, desk) - kinetic_d2f(w - h, desk)) / (2 * h)
        assert np.allclose(fd1, kinetic_df(w, desk), rtol=1e-6, atol=1e-6)
        assert np.allclose(fd2, kinetic_d2f(w, desk), rtol=1e-6, atol=1e-6)
        assert np.allclose(fd3, kinetic_d3f(w, desk), rtol=1e-5, atol=1e-5)


class TestPotential:
    def test_values(self, desk):
        assert potential_F(0.0, desk) == 0.0
        # 12.5 - 50 (1 - ln 2), negative below the homoclinic level
        assert potential_F(1.0, desk) == pytest.approx(12.5 - 50.0 * (1.0 - math.log(2.0)), rel=1e-15)
        assert potential_F(1.0, desk) == pytest.approx(-2.8426409720027345, rel=1e-14)
        assert potential_F(1e3, desk) > 1e5  # grows without bound

    def test_gradient_is_kinetic_f(self, desk):
        rng = np.random.default_rng(11)
        w = rng.uniform(-0.9, 8.0, size=60)
        h = 1e-6
        fd = (potential_F(w + h, desk) - potential_F(w - h, desk)) / (2 * h)
        assert np.allclose(fd, kinetic_f(w, desk), rtol=1e-6, atol=1e-6)

    def test_critical_points_are_exactly_zero_and_w0(self, desk):
        w0 = w0_const(desk)
        grid = np.linspace(-0.999, 10.0 * w0, 20001)
        f_vals = kinetic_f(grid, desk)
        signs = np.sign(f_vals)
        changes = np.nonzero(np.diff(signs[signs != 0.0]))[0]
        assert changes.size == 2  # only the saddle at 0 and the center at w0

    def test_curvature_signs(self, desk):
        w0 = w0_const(desk)
        assert kinetic_df(0.0, desk) < 0.0 < kinetic_df(w0, desk)
        exact = desk.lam * (1.0 - desk.d * desk.lam / (desk.b * desk.mu))
        assert kinetic_df(w0, desk) == pytest.approx(exact, rel=1e-14)

    def test_gap_matches_direct_difference(self, desk):
        w0 = w0_const(desk)
        for delta in (-0.9, -1e-3, 1e-4, 0.3):
            direct = float(potential_F(w0 + delta, desk) - potential_F(w0, desk))
            assert float(potential_gap(delta, desk)) == pytest.approx(direct, rel=1e-9, abs=1e-13)

    def test_gap_is_stable_near_zero(self, desk):
        # the direct difference loses digits here; the gap form must not
        g = float(potential_gap(1e-9, desk))
        curvature = 0.5 * desk.lam * (1.0 - desk.d * desk.lam / (desk.b * desk.mu))
        assert g == pytest.approx(curvature * 1e-18, rel=1e-6)


class TestEnergy:
    def test_homoclinic_level_is_zero(self, desk):
        assert energy(PhaseState(0.0, 0.0), desk) == 0.0

    def test_center_sits_below(self, desk):
        assert energy(PhaseState(w0_const(desk), 0.0), desk) < 0.0

    def test_direct_value(self, desk):
        assert energy(PhaseState(1.0, 2.0), desk) == pytest.approx(2.0 - 2.8426409720027345, rel=1e-13)
