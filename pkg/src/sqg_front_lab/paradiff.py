"""M-dependent paraproducts, trilinear splitting of Q, and normal-form variables."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .nonlocal_ops import QuadratureMesh, _node_chunks, _shifted, f_profile, f_profile_deriv
from .spectral import Field, Grid1D, antiderivative, derivative, smooth_step

MAX_PARA_N = 4096


class SmallDataError(ValueError):
    """The slope profile left the small-data regime (``max F(phi_x) > 1 - margin``)."""

    def __init__(self, measured: float, margin: float):
        self.measured = measured
        self.margin = margin
        super().__init__(f"max F(phi_x) = {measured:.6g} exceeds 1 - margin = {1 - margin:.6g}")


def chi(z):
    """Even cutoff: 1 on ``[-1/20, 1/20]``, 0 outside ``[-1/10, 1/10]``."""
    return smooth_step(20.0 * np.abs(np.asarray(z, dtype=float)))


def high_pass(xi, M: float):
    """``P_{>M}``: 0 below ``M``, smooth on ``[M, 2M]``, 1 above ``2M``."""
    return 1.0 - smooth_step(np.abs(np.asarray(xi, dtype=float)) / M)


@dataclass(frozen=True)
class ParaParams:
    """Paraproduct threshold; ``M=None`` resolves to ``4 * 2pi/L`` on use."""

    M: float | None = None

    def resolve(self, grid: Grid1D) -> float:
        M = 4 * grid.dk if self.M is None else float(self.M)
        if not M > 0:
            raise ValueError(f"M must be positive, got {M}")
        return M


@lru_cache(maxsize=8)
def _kernel(n: int, box_length: float, M: float):
    grid = Grid1D(n, box_length)
    k = grid.k
    xi, eta = k[:, None], k[None, :]
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    theta1 = k[idx]  # frequency carried by the coefficient
    theta2 = xi + eta
    base = chi(theta1**2 / (M**2 + theta2**2))
    hp = high_pass(k, M)
    base *= hp[:, None] * hp[None, :]
    nyq = n // 2
    base[nyq, :] = 0.0
    base[:, nyq] = 0.0
    base.setflags(write=False)
    idx.setflags(write=False)
    return base, idx


def _para_spectrum(a_values: np.ndarray, u_spec: np.ndarray, grid: Grid1D, M: float):
    """Spectrum of ``T_a u`` (``a`` given by values, ``u`` by spectrum)."""
    base, idx = _kernel(grid.n, grid.box_length, M)
    a_mean = a_values.mean()
    a_hat = np.fft.fft(a_values - a_mean) / grid.n
    a_hat[0] = 0.0
    out = (base * a_hat[idx]) @ u_spec
    return out + a_mean * u_spec


def _check_size(grid: Grid1D):
    if grid.n > MAX_PARA_N:
        raise ValueError(f"paraproducts are O(n^2); n={grid.n} exceeds {MAX_PARA_N}, "
                         "reduce the grid size")


def para_product(a: Field, u: Field, p: ParaParams = ParaParams()) -> Field:
    """``T_a u`` by exact double-sum quantization on grid frequencies.

    ``T_a = mean(a) Id + T_{a - mean(a)}``, so ``T_1`` is the identity.
    """
    grid = u.grid
    if a.grid != grid:
        raise ValueError("fields live on different grids")
    _check_size(grid)
    spec = _para_spectrum(a.values, u.spectrum, grid, p.resolve(grid))
    return Field.from_spectrum(grid, spec, real=a.is_real and u.is_real)


def balanced_pi(a: Field, b: Field, p: ParaParams = ParaParams()) -> Field:
    """Balanced remainder ``ab - T_a b - T_b a``."""
    return a * b - para_product(a, b, p) - para_product(b, a, p)


def decompose_Q(phi: Field, v: Field, mesh: QuadratureMesh, p: ParaParams = ParaParams()):
    """Split ``Q(phi, v)`` node by node into ``(Q_lh, Q_hl, Q_hh)``."""
    grid = phi.grid
    _check_size(grid)
    mesh.check_grid(grid)
    M = p.resolve(grid)
    fv, vv = phi.values, v.values
    lh = np.zeros(grid.n, dtype=complex)
    hl = np.zeros(grid.n, dtype=complex)
    hh = np.zeros(grid.n)
    for ys, ws in _node_chunks(mesh, grid.n, budget=2**18):
        A = f_profile((_shifted(fv, grid, ys) - fv) / ys[:, None])
        B = (_shifted(vv, grid, ys) - vv) / np.abs(ys)[:, None]
        for a_row, b_row, w in zip(A, B, ws):
            t_ab = _para_spectrum(a_row, np.fft.fft(b_row), grid, M)
            t_ba = _para_spectrum(b_row, np.fft.fft(a_row), grid, M)
            lh += w * t_ab
            hl += w * t_ba
            hh += w * (a_row * b_row - np.fft.ifft(t_ab).real - np.fft.ifft(t_ba).real)
    return (Field.from_spectrum(grid, lh), Field.from_spectrum(grid, hl), Field(grid, values=hh))


@dataclass(frozen=True)
class PsiDecomp:
    """``psi = d_x^{-1} F(phi_x)`` as a mean-zero periodic part plus ``slope * x``."""

    periodic: Field
    slope: float

    @property
    def grid(self) -> Grid1D:
        return self.periodic.grid

    def derivative(self) -> Field:
        return derivative(self.periodic) + self.slope


def psi_of_phi(phi: Field) -> PsiDecomp:
    slope_profile = Field(phi.grid, values=f_profile(derivative(phi).values))
    periodic, mean = antiderivative(slope_profile)
    return PsiDecomp(periodic, float(mean))


def jacobian(psi: PsiDecomp, margin: float = 0.05) -> Field:
    """``J = (1 - d_x psi)^{-1}``."""
    dpsi = psi.derivative()
    top = float(dpsi.values.max())
    if top > 1.0 - margin:
        raise SmallDataError(top, margin)
    return Field(psi.grid, values=1.0 / (1.0 - dpsi.values))


def normal_form_linearized(v: Field, phi: Field, p: ParaParams = ParaParams(),
                           margin: float = 0.05) -> Field:
    """``v - d_x T_{T_J v} psi - d_x Pi(T_J v, psi)`` with ``psi`` its periodic part."""
    psi = psi_of_phi(phi)
    J = jacobian(psi, margin)
    w = para_product(J, v, p)
    corr = para_product(w, psi.periodic, p) + balanced_pi(w, psi.periodic, p)
    return v - derivative(corr)


def normal_form_nonlinear(phi: Field, p: ParaParams = ParaParams(), margin: float = 0.05) -> Field:
    """``phi - Pi(psi, T_J phi_x)``."""
    psi = psi_of_phi(phi)
    J = jacobian(psi, margin)
    return phi - balanced_pi(psi.periodic, para_product(J, derivative(phi), p), p)


def moser_remainder(v: Field, p: ParaParams = ParaParams()) -> Field:
    """``F(v) - T_{F'(v)} v`` for the slope profile ``F``."""
    Fp = Field(v.grid, values=f_profile_deriv(v.values))
    return Field(v.grid, values=f_profile(v.values)) - para_product(Fp, v, p)
