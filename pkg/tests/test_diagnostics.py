import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import bump, random_band_limited
from sqg_front_lab.diagnostics import (LocalizationWarning, NormParams, control_A, control_B,
                                       edge_mass_fraction, energy_report, higher_energy, mass,
                                       modified_energy, norm_X, norm_Y, sobolev_norm,
                                       vector_field_L)
from sqg_front_lab.paradiff import SmallDataError
from sqg_front_lab.spectral import Field, Grid1D, derivative, frac_power, linear_propagate


@pytest.fixture(scope="module")
def wide():
    return Grid1D(2048, 400.0)


def packet_data(grid):
    # spectrum negligible near zero frequency, where log|xi| is singular
    return Field(grid, values=np.exp(-(grid.x / 8) ** 2) * np.sin(2 * grid.x))


class TestNormParams:
    def test_defaults_admissible(self):
        p = NormParams()
        assert p.s > 3 and p.s0 < 1

    @pytest.mark.parametrize("kw", [dict(s=3.0), dict(s0=1.0), dict(delta=0.0), dict(delta=1.0),
                                    dict(delta_B=0.0), dict(regime="other")])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            NormParams(**kw)

    def test_local_regime_is_looser(self):
        NormParams(s=2.5, s0=1.2, regime="local")
        with pytest.raises(ValueError):
            NormParams(s=2.5, s0=1.2)


class TestControlNorms:
    def test_A_on_sine(self, torus):
        eps = 0.03
        assert control_A(Field(torus, values=eps * np.sin(torus.x))) == pytest.approx(eps, rel=1e-12)

    def test_B_dominates_A(self, torus):
        phi = 0.1 * random_band_limited(torus, np.random.default_rng(0), 20)
        assert control_B(phi) >= control_A(phi)

    @given(st.floats(0.01, 10))
    def test_homogeneous(self, c):
        g = Grid1D(64, 2 * np.pi)
        phi = random_band_limited(g, np.random.default_rng(1), 20)
        assert control_A(c * phi) == pytest.approx(c * control_A(phi), rel=1e-12)
        assert control_B(c * phi) == pytest.approx(c * control_B(phi), rel=1e-12)
        assert norm_Y(c * phi) == pytest.approx(c * norm_Y(phi), rel=1e-12)
        assert mass(c * phi) == pytest.approx(c * c * mass(phi), rel=1e-12)

    def test_zero_field(self, torus):
        z = Field.zeros(torus)
        assert control_A(z) == control_B(z) == norm_Y(z) == norm_X(z, 1.0) == mass(z) == 0.0


class TestVectorField:
    def test_time_zero_is_multiplication(self, line):
        f = bump(line, 1.0, 2.0)
        np.testing.assert_allclose(vector_field_L(f, 0.0).values, line.x * f.values, atol=1e-14)

    def test_dispersive_part_on_mode(self, torus):
        f = Field(torus, values=np.cos(2 * torus.x))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LocalizationWarning)
            out = vector_field_L(f, 1.0) - vector_field_L(f, 0.0)
        # 2 f + 2 log|D| cos 2x
        expected = (2 + 2 * np.log(2)) * np.cos(2 * torus.x)
        np.testing.assert_allclose(out.values, expected, atol=1e-12)

    def test_warns_when_not_localized(self, torus):
        with pytest.warns(LocalizationWarning):
            vector_field_L(Field(torus, values=np.cos(torus.x)), 0.0)
        assert edge_mass_fraction(Field.zeros(torus)) == 0.0

    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
    def test_commutes_with_linear_flow(self, wide, t):
        f = packet_data(wide)
        a = vector_field_L(linear_propagate(f, t), t)
        b = linear_propagate(vector_field_L(f, 0.0), t)
        assert (a - b).norm() <= 1e-12 * b.norm()


class TestLinearDecay:
    def test_Y_decays_like_inverse_sqrt_t(self, wide):
        phi0 = bump(wide, 0.02, 2.0)
        times = np.linspace(1, 50, 50)
        scaled = np.array([np.sqrt(t) * norm_Y(linear_propagate(phi0, t)) for t in times])
        assert scaled.max() <= 3 * scaled[0]
        # the plain norm does decay
        assert norm_Y(linear_propagate(phi0, 50.0)) < 0.5 * norm_Y(linear_propagate(phi0, 1.0))

    def test_sobolev_norm_conserved(self, line):
        phi0 = bump(line, 0.1, 2.0)
        for s in (0.5, 2.0, 3.5):
            a = sobolev_norm(phi0, s)
            assert sobolev_norm(linear_propagate(phi0, 3.0), s) == pytest.approx(a, rel=1e-12)


class TestModifiedEnergy:
    def test_zero_phi(self, line):
        v = bump(line, 1.0, 3.0, 0.0, 2.0)
        assert modified_energy(v, Field.zeros(line)) == pytest.approx(v.norm() ** 2, rel=1e-12)

    def test_quadratic_in_v(self, line):
        v = bump(line, 1.0, 3.0, 0.0, 2.0)
        phi = bump(line, 0.3)
        assert modified_energy(3 * v, phi) == pytest.approx(9 * modified_energy(v, phi), rel=1e-12)

    def test_coercive(self, line):
        rng = np.random.default_rng(2)
        v = bump(line, 1.0, 3.0, 0.0, 2.0)
        for amp in (0.1, 0.3, 0.6):
            phi = bump(line, amp) + 0.02 * random_band_limited(line, rng, 5)
            e = modified_energy(v, phi)
            assert 0.5 * v.norm() ** 2 <= e <= 1.01 * v.norm() ** 2

    def test_small_data_guard(self, torus):
        with pytest.raises(SmallDataError):
            modified_energy(Field(torus, values=np.cos(torus.x)),
                            Field(torus, values=10 * np.sin(3 * torus.x)))


class TestHigherEnergy:
    def test_zero_phi(self, line):
        v = bump(line, 1.0, 3.0, 0.0, 2.0)
        for s in (1.0, 2.5):
            expected = frac_power(v, s).norm() ** 2
            assert higher_energy(v, Field.zeros(line), s) == pytest.approx(expected, rel=1e-12)

    def test_order_zero_matches_modified(self, line):
        v = bump(line, 1.0, 3.0, 0.0, 2.0)
        phi = bump(line, 0.3)
        a = higher_energy(v, phi, 0.0)
        b = modified_energy(v, phi)
        assert a == pytest.approx(b, rel=1e-6)

    @pytest.mark.parametrize("amp", [0.05, 0.2, 0.4])
    def test_equivalent_to_sobolev(self, line, amp):
        phi = bump(line, amp, 2.0)
        v = derivative(phi)
        e = higher_energy(v, phi, 2.5)
        ref = frac_power(v, 2.5).norm() ** 2
        assert 0.5 * ref <= e <= 2.0 * ref

    def test_order_range(self, line):
        with pytest.raises(ValueError):
            higher_energy(Field.zeros(line), Field.zeros(line), 7.0)


class TestEnergyReport:
    def test_row(self, line):
        phi = bump(line, 0.05, 2.0)
        rep = energy_report(phi, 1.0)
        row = rep.as_row()
        assert list(row) == ["t", "mass", "E_s", "sobolev_s", "A", "B", "X", "Y"]
        assert rep.mass == pytest.approx(mass(phi))
        assert 0.5 * rep.sobolev_s <= rep.E_s <= 2 * rep.sobolev_s
        assert rep.B >= rep.A > 0
