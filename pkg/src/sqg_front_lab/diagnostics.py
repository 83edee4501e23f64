"""Control norms, weighted norms, mass and the modified energies."""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .nonlocal_ops import f_profile
from .paradiff import ParaParams, SmallDataError, jacobian, para_product, psi_of_phi
from .spectral import (LOG_ABS, DyadicPartition, Field, Multiplier, apply_multiplier, derivative,
                       frac_power)


class LocalizationWarning(UserWarning):
    """Mass near the box edge; the sawtooth coordinate is no longer faithful."""


@dataclass(frozen=True)
class NormParams:
    s: float = 3.5
    s0: float = 0.5
    delta: float = 0.1
    delta_B: float = 0.05
    regime: str = "global"

    def __post_init__(self):
        if self.regime == "global":
            ok = self.s > 3 and self.s0 < 1
        elif self.regime == "local":
            ok = self.s > 2 and self.s0 < 1.5
        else:
            raise ValueError(f"unknown regime {self.regime!r}")
        if not ok:
            raise ValueError(f"(s, s0) = ({self.s}, {self.s0}) not admissible "
                             f"for the {self.regime} regime")
        if not (0 < self.delta < 1 and self.delta_B > 0):
            raise ValueError("delta must lie in (0, 1) and delta_B must be positive")


@dataclass(frozen=True)
class EnergyReport:
    t: float
    mass: float
    E_s: float
    sobolev_s: float
    A: float
    B: float
    X: float
    Y: float

    def as_row(self) -> dict:
        return asdict(self)


def control_A(phi: Field) -> float:
    return derivative(phi).max_abs()


def control_B(phi: Field, delta_B: float = 0.05, partition: DyadicPartition | None = None) -> float:
    """``max|phi_x| + sup_{lam >= 1} lam^(1/2 + delta_B) max|P_lam phi_x|``."""
    dphi = derivative(phi)
    part = partition or DyadicPartition(phi.grid)
    tail = [lam ** (0.5 + delta_B) * part.project(dphi, lam).max_abs()
            for lam in part.lambdas if lam >= 1]
    return dphi.max_abs() + max(tail, default=0.0)


def edge_mass_fraction(f: Field, edge: float = 0.1) -> float:
    x, L = f.grid.x, f.grid.box_length
    outer = np.abs(x) >= (0.5 - edge) * L
    total = np.sum(np.abs(f.values) ** 2)
    return 0.0 if total == 0 else float(np.sum(np.abs(f.values[outer]) ** 2) / total)


def vector_field_L(f: Field, t: float) -> Field:
    """``(x + 2t) f + 2t log|D| f`` with the box-centred coordinate ``x``."""
    if edge_mass_fraction(f) > 1e-6:
        warnings.warn("field is not localized away from the box edge", LocalizationWarning,
                      stacklevel=2)
    out = Field(f.grid, values=(f.grid.x + 2 * t) * f.values)
    if t != 0:
        out = out + 2 * t * apply_multiplier(f, LOG_ABS)
    return out


def sobolev_norm(phi: Field, s: float) -> float:
    """Homogeneous ``H^s`` seminorm ``|| |D|^s phi ||_{L^2}``."""
    return frac_power(phi, s).norm()


def norm_X(phi: Field, t: float, p: NormParams = NormParams()) -> float:
    hom = max(sobolev_norm(phi, p.s0), sobolev_norm(phi, p.s))
    return hom + vector_field_L(derivative(phi), t).norm()


def norm_Y(phi: Field, p: NormParams = NormParams()) -> float:
    d = p.delta
    m = Multiplier(lambda xi: np.abs(xi) ** (1 - d) * (1 + xi * xi) ** ((0.5 + 2 * d) / 2) + 0j)
    return apply_multiplier(phi, m).max_abs()


def mass(phi: Field) -> float:
    return phi.norm() ** 2


def _energy_with_profile(v: Field, F: Field, p: ParaParams) -> float:
    return float(np.real(v.inner(v) - v.inner(para_product(F, v, p))))


def modified_energy(v: Field, phi: Field, p: ParaParams = ParaParams(), margin: float = 0.05) -> float:
    """``int v T_{1 - d_x psi} v dx`` with ``d_x psi = F(phi_x)``."""
    F = Field(phi.grid, values=f_profile(derivative(phi).values))
    if F.values.max() > 1 - margin:
        raise SmallDataError(float(F.values.max()), margin)
    return _energy_with_profile(v, F, p)


def higher_energy(v: Field, phi: Field, s: float, p: ParaParams = ParaParams(),
                  margin: float = 0.05) -> float:
    """Modified energy of the conjugated variable ``T_{J^{-s}} |D|^s v``."""
    if not 0 <= s <= 6:
        raise ValueError(f"s={s} outside [0, 6]")
    psi = psi_of_phi(phi)
    J = jacobian(psi, margin)
    vs = frac_power(v, s) if s != 0 else v
    w = para_product(Field(phi.grid, values=J.values ** (-s)), vs, p)
    F = psi.derivative()
    return _energy_with_profile(w, F, p)


def energy_report(phi: Field, t: float, norm_params: NormParams = NormParams(),
                  para: ParaParams = ParaParams(), partition: DyadicPartition | None = None,
                  margin: float = 0.05) -> EnergyReport:
    """One diagnostic row.  Energies are measured on ``v = phi_x`` at order ``s - 1``,
    which is a solution of the linearized flow and carries the ``H^s`` norm of ``phi``."""
    s = norm_params.s
    dphi = derivative(phi)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LocalizationWarning)
        X = norm_X(phi, t, norm_params)
    return EnergyReport(
        t=float(t),
        mass=mass(phi),
        E_s=higher_energy(dphi, phi, s - 1, para, margin),
        sobolev_s=sobolev_norm(phi, s) ** 2,
        A=dphi.max_abs(),
        B=control_B(phi, norm_params.delta_B, partition),
        X=X,
        Y=norm_Y(phi, norm_params),
    )
