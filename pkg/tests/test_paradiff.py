import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import bump, random_band_limited
from sqg_front_lab.nonlocal_ops import QuadratureMesh, eval_Q, f_profile
from sqg_front_lab.paradiff import (MAX_PARA_N, ParaParams, SmallDataError, balanced_pi, chi,
                                    decompose_Q, high_pass, jacobian, moser_remainder,
                                    normal_form_linearized, normal_form_nonlinear, para_product,
                                    psi_of_phi)
from sqg_front_lab.spectral import Field, Grid1D, derivative

M4 = ParaParams(4.0)


@pytest.fixture
def grid():
    return Grid1D(128, 2 * np.pi)


def mode(grid, k, fn=np.cos):
    return Field(grid, values=fn(k * grid.x))


class TestCutoffs:
    def test_chi_profile(self):
        z = np.linspace(-0.2, 0.2, 401)
        c = chi(z)
        np.testing.assert_array_equal(c, chi(-z))
        assert np.all(c[np.abs(z) <= 0.05] == 1.0)
        assert np.all(c[np.abs(z) >= 0.1] == 0.0)
        half = z >= 0
        assert np.all(np.diff(c[half]) <= 0)
        assert np.all((0 <= c) & (c <= 1))

    def test_high_pass(self):
        assert high_pass(3.9, 4.0) == 0.0
        assert high_pass(8.0, 4.0) == 1.0
        assert 0 < high_pass(6.0, 4.0) < 1

    def test_default_M(self, grid):
        assert ParaParams().resolve(grid) == pytest.approx(4 * grid.dk)
        with pytest.raises(ValueError):
            ParaParams(-1.0).resolve(grid)


class TestParaProduct:
    def test_constant_coefficient(self, grid):
        u = random_band_limited(grid, np.random.default_rng(0), 30)
        out = para_product(Field(grid, values=np.full(grid.n, 2.5)), u)
        assert (out - 2.5 * u).norm() <= 1e-12 * u.norm()

    def test_low_high_is_full_product(self, grid):
        a, u = mode(grid, 1), mode(grid, 32)
        out = para_product(a, u, M4)
        assert (out - a * u).max_abs() <= 1e-8

    def test_high_low_is_killed(self, grid):
        out = para_product(mode(grid, 32), mode(grid, 1), M4)
        assert out.max_abs() <= 1e-8

    @given(st.integers(0, 10_000))
    def test_self_adjoint(self, seed):
        g = Grid1D(64, 2 * np.pi)
        rng = np.random.default_rng(seed)
        a = random_band_limited(g, rng, 6) + 0.3
        u, w = random_band_limited(g, rng, 25), random_band_limited(g, rng, 25)
        lhs = para_product(a, u, M4).inner(w)
        rhs = u.inner(para_product(a, w, M4))
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))

    def test_size_guard(self):
        big = Grid1D(2 * MAX_PARA_N, 1.0)
        with pytest.raises(ValueError, match="reduce"):
            para_product(Field.zeros(big), Field.zeros(big))

    def test_commutator_decays_with_frequency(self):
        g = Grid1D(512, 2 * np.pi)
        f = Field(g, values=np.cos(g.x) + 0.5 * np.sin(2 * g.x))
        h = Field(g, values=np.exp(np.cos(g.x)))
        sizes = []
        for k in (8, 16, 32):
            u = mode(g, k)
            c = para_product(f, para_product(h, u, M4), M4) - para_product(h, para_product(f, u, M4), M4)
            sizes.append(c.norm() / u.norm())
        assert sizes[0] > sizes[1] > sizes[2]


class TestBalancedPi:
    @given(st.integers(0, 10_000))
    def test_trichotomy_and_symmetry(self, seed):
        g = Grid1D(64, 2 * np.pi)
        rng = np.random.default_rng(seed)
        a, b = random_band_limited(g, rng, 10), random_band_limited(g, rng, 10)
        pi = balanced_pi(a, b, M4)
        recon = para_product(a, b, M4) + para_product(b, a, M4) + pi
        assert (recon - a * b).max_abs() <= 1e-12 * (a * b).max_abs()
        assert (balanced_pi(b, a, M4) - pi).max_abs() <= 1e-14 * max(pi.max_abs(), 1.0)

    def test_constant_against_mean_zero(self, grid):
        b = random_band_limited(grid, np.random.default_rng(1), 20)
        out = balanced_pi(Field(grid, values=np.full(grid.n, 0.7)), b, M4)
        assert out.max_abs() <= 1e-10

    def test_separated_modes_small(self, grid):
        a, b = mode(grid, 1), mode(grid, 40)
        assert balanced_pi(a, b, M4).norm() <= 1e-6 * (a * b).norm()

    def test_comparable_modes_carry_product(self, grid):
        a, b = mode(grid, 16), mode(grid, 17)
        assert balanced_pi(a, b, M4).norm() ** 2 >= 0.9 * (a * b).norm() ** 2


class TestDecomposeQ:
    @pytest.fixture
    def mesh(self, grid):
        return QuadratureMesh.for_grid(grid)

    def test_zero_phi(self, grid, mesh):
        parts = decompose_Q(Field.zeros(grid), mode(grid, 3), mesh, M4)
        assert all(p.max_abs() == 0 for p in parts)

    def test_sum_identity(self, grid, mesh):
        rng = np.random.default_rng(2)
        phi = 0.05 * random_band_limited(grid, rng, 8)
        v = random_band_limited(grid, rng, 30)
        lh, hl, hh = decompose_Q(phi, v, mesh, M4)
        q = eval_Q(phi, v, mesh)
        assert (lh + hl + hh - q).norm() <= 1e-8 * q.norm()

    def test_low_high_dominates(self, grid, mesh):
        phi = Field(grid, values=0.1 * (np.cos(grid.x) + np.sin(2 * grid.x)))
        v = Field(grid, values=np.cos(32 * grid.x) + np.sin(40 * grid.x))
        lh, hl, hh = decompose_Q(phi, v, mesh, M4)
        total = lh.norm() ** 2 + hl.norm() ** 2 + hh.norm() ** 2
        assert lh.norm() ** 2 >= 0.9 * total


class TestPsiAndJacobian:
    def test_zero(self, grid):
        psi = psi_of_phi(Field.zeros(grid))
        assert psi.slope == 0 and psi.periodic.max_abs() == 0
        np.testing.assert_array_equal(jacobian(psi).values, 1.0)

    def test_reproduces_profile(self, grid):
        phi = 0.2 * random_band_limited(grid, np.random.default_rng(3), 6)
        psi = psi_of_phi(phi)
        F = f_profile(derivative(phi).values)
        assert np.max(np.abs(psi.derivative().values - F)) <= 1e-10
        assert psi.slope >= 0
        assert abs(psi.periodic.mean()) <= 1e-14

    def test_uniform_slope(self, grid):
        s0 = 0.4
        # periodic phi with phi_x = s0 everywhere is impossible, so check the profile directly
        J = jacobian(type(psi_of_phi(Field.zeros(grid)))(Field.zeros(grid), float(f_profile(s0))))
        np.testing.assert_allclose(J.values, 1 / (1 - f_profile(s0)))

    def test_bounds(self, grid):
        phi = 0.3 * random_band_limited(grid, np.random.default_rng(4), 4)
        phi = phi * (0.5 / derivative(phi).max_abs())
        assert np.all(jacobian(psi_of_phi(phi)).values >= 1.0)

    def test_margin(self, grid):
        phi = Field(grid, values=10.0 * np.sin(3 * grid.x))
        with pytest.raises(SmallDataError) as info:
            jacobian(psi_of_phi(phi))
        assert info.value.measured > 0.95

    def test_quartic_defect(self, line):
        out = []
        for amp in (0.4, 0.2, 0.1):
            phi = bump(line, amp)
            J = jacobian(psi_of_phi(phi))
            out.append(np.max(np.abs(J.values - 1 - f_profile(derivative(phi).values))))
        for a, b in zip(out, out[1:]):
            assert 14 <= a / b <= 18


class TestNormalForms:
    def test_identity_at_zero(self, line):
        v = bump(line, 1.0, 3.0, 0.0, 2.0)
        assert (normal_form_linearized(v, Field.zeros(line)) - v).max_abs() <= 1e-14
        assert normal_form_nonlinear(Field.zeros(line)).max_abs() == 0.0

    def test_linearized_scales_quadratically(self, line):
        v = bump(line, 1.0, 3.0, 0.0, 2.0)
        out = []
        for amp in (0.2, 0.1, 0.05):
            phi = Field(line, values=bump(line, amp).values * (1 + np.cos(line.x)))
            out.append((normal_form_linearized(v, phi) - v).norm())
        for a, b in zip(out, out[1:]):
            assert 3.6 <= a / b <= 4.4
        assert out[0] <= 0.2 * v.norm()

    def test_linearized_is_linear(self, line):
        v = bump(line, 1.0, 3.0, 0.0, 2.0)
        phi = bump(line, 0.2)
        a = normal_form_linearized(2.5 * v, phi)
        b = 2.5 * normal_form_linearized(v, phi)
        assert (a - b).norm() <= 1e-10 * b.norm()

    def test_nonlinear_correction_is_cubic(self, line):
        out = []
        for amp in (0.2, 0.1, 0.05):
            phi = Field(line, values=bump(line, amp).values * (1 + np.cos(line.x)))
            out.append((normal_form_nonlinear(phi) - phi).norm())
        for a, b in zip(out, out[1:]):
            assert 7.2 <= a / b <= 8.8

    def test_moser_remainder(self, line):
        r = [moser_remainder(bump(line, a, 2.0, 0.0, 3.0)).norm() for a in (0.4, 0.2, 0.1)]
        for a, b in zip(r, r[1:]):
            assert a / b >= 3.5
