"""Wave packets, asymptotic profiles and the modified-scattering fit.

Dispersion conventions: ``a(xi) = -2 xi log|xi|``, group velocity
``a'(xi) = -2 - 2 log|xi|`` and the negative-frequency branch
``xi_v = -exp(-1 - v/2)``.  Dyadic block ``lam`` owns the frequency band
``|xi| in [lam/sqrt2, sqrt2 lam)`` and hence the velocity interval
``J_lam = -2 - 2 log(lam) +/- log 2``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .diagnostics import LocalizationWarning
from .spectral import DyadicPartition, Field, Grid1D


def xi_of_v(v):
    return -np.exp(-1.0 - np.asarray(v, dtype=float) / 2.0)


def dispersion_a(xi):
    xi = np.asarray(xi, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(xi == 0, 0.0, -2.0 * xi * np.log(np.abs(xi)))


def group_velocity(xi):
    xi = np.asarray(xi, dtype=float)
    if np.any(xi == 0):
        raise ValueError("group velocity is singular at xi = 0")
    return -2.0 - 2.0 * np.log(np.abs(xi))


def second_deriv(xi):
    xi = np.asarray(xi, dtype=float)
    if np.any(xi == 0):
        raise ValueError("a'' is singular at xi = 0")
    return -2.0 / xi


def phase_of_v(v):
    """Stationary phase ``phi(v) = v xi_v - a(xi_v)``."""
    xv = xi_of_v(v)
    return np.asarray(v) * xv - dispersion_a(xv)


def velocity_interval(lam: float) -> tuple[float, float]:
    c = -2.0 - 2.0 * np.log(lam)
    return c - np.log(2.0), c + np.log(2.0)


def velocity_midpoint(lam: float) -> float:
    return -2.0 - 2.0 * np.log(lam)


def _raw_bump(y):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    inside = np.abs(y) < 1
    out[inside] = np.exp(-1.0 / (1.0 - y[inside] ** 2))
    return out


@lru_cache(maxsize=1)
def _bump_norm() -> float:
    val, _ = quad(lambda y: float(_raw_bump(y)), -1, 1, epsabs=1e-14, epsrel=1e-14)
    return val


def bump(y):
    """Unit bump ``exp(-1/(1-y^2)) / Z`` on ``|y| < 1`` with integral 1."""
    return _raw_bump(y) / _bump_norm()


@dataclass(frozen=True)
class PacketParams:
    lam: float = 1.0
    v_grid: tuple[float, ...] = ()
    t_min: float | None = None

    @property
    def t_floor(self) -> float:
        return max(1.0, 1.0 / self.lam) if self.t_min is None else self.t_min

    def __post_init__(self):
        lo, hi = velocity_interval(self.lam)
        bad = [v for v in self.v_grid if not lo <= v <= hi]
        if bad:
            raise ValueError(f"velocities {bad} lie outside J_lam = [{lo:.4f}, {hi:.4f}]")


def packet_field(v: float, t: float, grid: Grid1D) -> Field:
    """``a''(xi_v)^(-1/2) chi((x - vt) / (t a''(xi_v))^(1/2)) exp(i t phi(x/t))``."""
    if t < 1:
        raise ValueError(f"packets need t >= 1, got {t}")
    if abs(v * t) > 0.4 * grid.box_length:
        warnings.warn(f"packet centre v*t={v * t:g} leaves the central 80% of the box",
                      LocalizationWarning, stacklevel=2)
    a2 = float(second_deriv(xi_of_v(v)))
    x = grid.x
    y = (x - v * t) / np.sqrt(t * a2)
    env = bump(y) / np.sqrt(a2)
    nz = env != 0
    vals = np.zeros(grid.n, dtype=complex)
    vals[nz] = env[nz] * np.exp(1j * t * phase_of_v(x[nz] / t))
    return Field(grid, values=vals)


def extract_gamma(phi: Field, t: float, lam: float, v: float,
                  partition: DyadicPartition | None = None, t_min: float | None = None) -> complex:
    """``<P_lam phi, u^v>`` (conjugate on the packet)."""
    floor = max(1.0, 1.0 / lam) if t_min is None else t_min
    lo, hi = velocity_interval(lam)
    if t < floor or not lo <= v <= hi:
        raise ValueError(f"(t={t:g}, v={v:g}) outside the region t >= {floor:g}, "
                         f"v in [{lo:.4f}, {hi:.4f}]")
    part = partition or DyadicPartition(phi.grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LocalizationWarning)
        u = packet_field(v, t, phi.grid)
    return complex(part.project(phi, lam).inner(u))


@dataclass
class ProfileSeries:
    lam: float
    times: np.ndarray
    velocities: np.ndarray
    gamma: np.ndarray  # shape (len(times), len(velocities))
    residual: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def rows(self):
        """``(t, v, re_gamma, im_gamma, re_f, im_f)`` per sample."""
        for i, t in enumerate(self.times):
            for j, v in enumerate(self.velocities):
                g = self.gamma[i, j]
                f = self.residual[i, j] if self.residual is not None else np.nan
                yield (t, v, g.real, g.imag, np.real(f), np.imag(f))


def profile_series(traj, lam: float, v_grid, params: PacketParams | None = None) -> ProfileSeries:
    """``gamma`` at every snapshot of ``traj`` with ``t >= t_floor``."""
    params = params or PacketParams(lam=lam, v_grid=tuple(v_grid))
    v_grid = np.asarray(v_grid, dtype=float)
    snaps = [s for s in traj.snapshots if s.t >= params.t_floor]
    if not snaps:
        return ProfileSeries(lam, np.array([]), v_grid, np.zeros((0, v_grid.size), complex))
    part = DyadicPartition(snaps[0].phi.grid)
    gam = np.array([[extract_gamma(s.phi, s.t, lam, v, part, params.t_min) for v in v_grid]
                    for s in snaps], dtype=complex).reshape(len(snaps), v_grid.size)
    return ProfileSeries(lam, np.array([s.t for s in snaps]), v_grid, gam)


def ode_coefficient(v, q1: float):
    """``q(xi_v) xi_v`` with ``q(xi) = q1 xi^2``."""
    xv = xi_of_v(v)
    return q1 * xv**2 * xv


def ode_residual(series: ProfileSeries, q1: float) -> ProfileSeries:
    """``f = d(gamma)/dt - i q(xi_v) xi_v t^-1 gamma |gamma|^2`` by centred differences."""
    if series.times.size < 3:
        raise ValueError("need at least 3 time samples")
    g = series.gamma
    dg = np.gradient(g, series.times, axis=0, edge_order=2)
    c = ode_coefficient(series.velocities, q1)[None, :]
    f = dg - 1j * c / series.times[:, None] * g * np.abs(g) ** 2
    return ProfileSeries(series.lam, series.times, series.velocities, g, f)


@dataclass
class ScatterFit:
    window: tuple[float, float]
    velocities: np.ndarray
    amplitude: np.ndarray
    phase: np.ndarray
    residual: np.ndarray
    flagged: np.ndarray = field(default_factory=lambda: np.array([], bool))

    @property
    def W(self) -> np.ndarray:
        return self.amplitude * np.exp(1j * self.phase)


def fit_scattering(series: ProfileSeries, q1: float, window: tuple[float, float]) -> ScatterFit:
    """Fit ``gamma ~ W exp(i q(xi_v) xi_v |W|^2 log t)`` over ``window``.

    A velocity is flagged when consecutive samples rotate by more than
    ``0.9 pi``, where unwrapping becomes ambiguous.
    """
    t1, t2 = window
    if t1 < series.times[0] - 1e-12 or t2 > series.times[-1] + 1e-12:
        raise ValueError(f"window {window} outside the series range")
    sel = (series.times >= t1 - 1e-12) & (series.times <= t2 + 1e-12)
    if sel.sum() < 5:
        raise ValueError("need at least 5 samples in the fit window")
    t = series.times[sel]
    g = series.gamma[sel]
    c = ode_coefficient(series.velocities, q1)
    amp = np.abs(g).mean(axis=0)
    steps = np.angle(g[1:] / g[:-1])
    flagged = np.any(np.abs(steps) > 0.9 * np.pi, axis=0)
    theta = np.unwrap(np.angle(g), axis=0)
    detr = theta - c[None, :] * amp[None, :] ** 2 * np.log(t)[:, None]
    # centre the phase branch on the first sample before averaging
    shift = np.round((detr[0] - np.angle(np.exp(1j * detr[0]))) / (2 * np.pi)) * 2 * np.pi
    detr = detr - shift[None, :]
    phase = detr.mean(axis=0)
    resid = (np.sqrt(np.mean((detr - phase) ** 2, axis=0))
             + np.sqrt(np.mean((np.abs(g) - amp) ** 2, axis=0)))
    return ScatterFit((t1, t2), series.velocities.copy(), amp, phase, resid, flagged)


def integrate_profile_ode(gamma0: complex, v: float, q1: float, times) -> np.ndarray:
    """Exact flow of ``d(gamma)/dt = i q(xi_v) xi_v t^-1 gamma |gamma|^2`` from ``times[0]``."""
    times = np.asarray(times, dtype=float)
    c = float(ode_coefficient(v, q1))
    return gamma0 * np.exp(1j * c * abs(gamma0) ** 2 * np.log(times / times[0]))
