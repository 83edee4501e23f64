"""Integrating-factor RK4 for the front equation and its linearization.

The state is carried as a real-FFT spectrum.  In the frame
``w = exp(-t omega(D)) phi`` the linear flow is exact, so only the cubic
nonlinearity ``Q(phi, phi_x)`` is integrated by the classical four-stage
scheme (Lawson form).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .diagnostics import EnergyReport, NormParams, energy_report
from .nonlocal_ops import QuadratureMesh, f_profile, f_profile_deriv
from .paradiff import ParaParams, SmallDataError
from .spectral import DyadicPartition, Field, Grid1D, irfft, omega, rfft

log = logging.getLogger(__name__)


class IntegrationError(RuntimeError):
    def __init__(self, t: float, reason: str):
        self.t = t
        super().__init__(f"integration aborted at t={t:.6g}: {reason}")


@dataclass(frozen=True)
class InitialData:
    """Named initial profile.

    ``gaussian``: ``A exp(-((x-c)/w)^2)``;
    ``packet``: the same envelope times ``cos(k (x - c))``;
    ``zero``: identically 0.
    """

    profile: str = "gaussian"
    amplitude: float = 0.05
    width: float = 2.0
    center: float = 0.0
    wavenumber: float = 0.0

    def __post_init__(self):
        if self.profile not in ("gaussian", "packet", "zero"):
            raise ValueError(f"unknown profile {self.profile!r}")
        if self.width <= 0:
            raise ValueError("width must be positive")

    def values(self, grid: Grid1D) -> np.ndarray:
        if self.profile == "zero" or self.amplitude == 0:
            return np.zeros(grid.n)
        z = (grid.x - self.center) / self.width
        env = self.amplitude * np.exp(-z * z)
        if self.profile == "packet":
            env = env * np.cos(self.wavenumber * (grid.x - self.center))
        return env


@dataclass(frozen=True)
class SimConfig:
    grid: Grid1D
    dt: float
    t_end: float
    initial: InitialData = InitialData()
    v_initial: InitialData | None = None
    mesh: QuadratureMesh | None = None
    retained_fraction: float = 0.5
    snapshot_times: tuple[float, ...] = ()
    diag_every: float | None = None
    cfl: float = 0.5
    margin: float = 0.05
    nonlinear: bool = True
    norm_params: NormParams = NormParams()
    para: ParaParams = ParaParams()

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 < self.retained_fraction <= 2 / 3:
            raise ValueError("retained_fraction must lie in (0, 2/3]")
        if self.dt > self.dt_max:
            raise ValueError(f"dt={self.dt:g} violates the CFL guard dt <= {self.dt_max:.4g}")
        ts = tuple(self.snapshot_times)
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("snapshot_times must be strictly increasing")
        if ts and (ts[0] < 0 or ts[-1] > self.t_end + 1e-12):
            raise ValueError("snapshot_times must lie in [0, t_end]")

    @property
    def dt_max(self) -> float:
        k = self.grid.rk[self.mask]
        k = k[k > 0]
        speed = np.max(np.abs(-2.0 - 2.0 * np.log(k)))
        return self.cfl * self.grid.dx / speed

    @property
    def mask(self) -> np.ndarray:
        m = np.arange(self.grid.n // 2 + 1) <= self.retained_fraction * (self.grid.n // 2)
        m[-1] = False
        return m

    @property
    def quadrature(self) -> QuadratureMesh:
        return self.mesh or QuadratureMesh.for_grid(self.grid)


@dataclass
class SimState:
    t: float
    phi: Field
    v: Field | None = None


@dataclass
class Trajectory:
    snapshots: list[SimState] = field(default_factory=list)
    reports: list[EnergyReport] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def final(self) -> SimState:
        return self.snapshots[-1]


class NonlinearTerm:
    """Quadrature of ``Q(phi, phi_x)`` and of its Frechet derivative on a fixed mesh.

    The derivative is evaluated in chain-rule form
    ``sum_j w_j [F'(delta phi) delta v |delta| phi_x + F(delta phi) |delta| v_x]``,
    which equals ``d_x Q(phi, v)`` and is the exact tangent of the discrete
    nonlinear term.
    """

    def __init__(self, grid: Grid1D, mesh: QuadratureMesh, mask: np.ndarray | None = None,
                 margin: float = 0.05, chunk: int = 2**21):
        mesh.check_grid(grid)
        self.grid = grid
        self.margin = margin
        ys, ws = mesh.symmetric()
        self.ws = ws
        self.inv_y = 1.0 / ys
        self.inv_abs = 1.0 / np.abs(ys)
        phase = np.exp(1j * np.outer(ys, grid.rk))
        phase[:, -1] = 0.0
        self.phase = phase
        self.ik = 1j * grid.rk
        self.mask = np.ones(grid.n // 2 + 1, bool) if mask is None else mask
        self.step = max(2, (chunk // grid.n) & ~1)

    def _chunks(self):
        for i in range(0, self.ws.size, self.step):
            yield slice(i, i + self.step)

    def _check(self, dphi: np.ndarray, t: float):
        top = float(np.max(f_profile(dphi)))
        if top > 1.0 - self.margin:
            raise SmallDataError(top, self.margin)

    def __call__(self, phi_hat: np.ndarray, t: float = 0.0) -> np.ndarray:
        n = self.grid.n
        dphi_hat = self.ik * phi_hat
        phi, dphi = irfft(phi_hat, n), irfft(dphi_hat, n)
        self._check(dphi, t)
        acc = np.zeros(n)
        for sl in self._chunks():
            ph = self.phase[sl]
            s = irfft(phi_hat * ph, n, axis=1)
            sd = irfft(dphi_hat * ph, n, axis=1)
            integ = f_profile((s - phi) * self.inv_y[sl, None]) * ((sd - dphi) * self.inv_abs[sl, None])
            acc = acc + np.sum(self.ws[sl, None] * integ, axis=0)
        return rfft(acc) * self.mask

    def coupled(self, phi_hat: np.ndarray, v_hat: np.ndarray, t: float = 0.0):
        n = self.grid.n
        dphi_hat = self.ik * phi_hat
        dv_hat = self.ik * v_hat
        phi, dphi = irfft(phi_hat, n), irfft(dphi_hat, n)
        v, dv = irfft(v_hat, n), irfft(dv_hat, n)
        self._check(dphi, t)
        acc = np.zeros(n)
        lin = np.zeros(n)
        for sl in self._chunks():
            ph = self.phase[sl]
            iy, ia = self.inv_y[sl, None], self.inv_abs[sl, None]
            d_phi = (irfft(phi_hat * ph, n, axis=1) - phi) * iy
            d_dphi = (irfft(dphi_hat * ph, n, axis=1) - dphi) * ia
            d_v = (irfft(v_hat * ph, n, axis=1) - v) * iy
            d_dv = (irfft(dv_hat * ph, n, axis=1) - dv) * ia
            F = f_profile(d_phi)
            w = self.ws[sl, None]
            acc = acc + np.sum(w * (F * d_dphi), axis=0)
            lin = lin + np.sum(w * (f_profile_deriv(d_phi) * d_v * d_dphi + F * d_dv), axis=0)
        return rfft(acc) * self.mask, rfft(lin) * self.mask


def _dealiased(f: Field, mask: np.ndarray) -> np.ndarray:
    return rfft(np.real(f.values)) * mask


def _to_field(grid: Grid1D, spec: np.ndarray) -> Field:
    return Field(grid, values=irfft(spec, grid.n))


def rhs_nonlinear(phi: Field, mesh: QuadratureMesh | None = None, retained_fraction: float = 0.5,
                  margin: float = 0.05) -> Field:
    """Dealiased ``Q(phi, phi_x)``; the linear part is left to the integrating factor."""
    grid = phi.grid
    mask = SimConfig(grid, dt=1e-9, t_end=0.0, retained_fraction=retained_fraction).mask
    term = NonlinearTerm(grid, mesh or QuadratureMesh.for_grid(grid), mask, margin)
    return _to_field(grid, term(_dealiased(phi, mask)))


def rhs_linearized(phi: Field, v: Field, mesh: QuadratureMesh | None = None,
                   retained_fraction: float = 0.5, margin: float = 0.05) -> Field:
    """Dealiased ``d_x Q(phi, v)``."""
    grid = phi.grid
    mask = SimConfig(grid, dt=1e-9, t_end=0.0, retained_fraction=retained_fraction).mask
    term = NonlinearTerm(grid, mesh or QuadratureMesh.for_grid(grid), mask, margin)
    return _to_field(grid, term.coupled(_dealiased(phi, mask), _dealiased(v, mask))[1])


class _Stepper:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.grid = cfg.grid
        self.mask = cfg.mask
        self.omega = omega(self.grid.rk) * self.mask
        self.term = NonlinearTerm(cfg.grid, cfg.quadrature, self.mask, cfg.margin) if cfg.nonlinear else None

    def _N(self, u, t):
        if self.term is None:
            return np.zeros_like(u)
        return self.term(u, t)

    def _NN(self, uv, t):
        u, v = uv
        if self.term is None:
            return np.zeros_like(u), np.zeros_like(v)
        return self.term.coupled(u, v, t)

    def step(self, u: np.ndarray, t: float, h: float) -> np.ndarray:
        E2 = np.exp(0.5 * h * self.omega)
        E = E2 * E2
        k1 = self._N(u, t)
        k2 = self._N(E2 * (u + 0.5 * h * k1), t + 0.5 * h)
        k3 = self._N(E2 * u + 0.5 * h * k2, t + 0.5 * h)
        k4 = self._N(E * u + h * E2 * k3, t + h)
        out = E * u + (h / 6.0) * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)
        if not np.all(np.isfinite(out)):
            raise IntegrationError(t + h, "non-finite values")
        return out

    def step_coupled(self, u, v, t, h):
        E2 = np.exp(0.5 * h * self.omega)
        E = E2 * E2
        a1, b1 = self._NN((u, v), t)
        a2, b2 = self._NN((E2 * (u + 0.5 * h * a1), E2 * (v + 0.5 * h * b1)), t + 0.5 * h)
        a3, b3 = self._NN((E2 * u + 0.5 * h * a2, E2 * v + 0.5 * h * b2), t + 0.5 * h)
        a4, b4 = self._NN((E * u + h * E2 * a3, E * v + h * E2 * b3), t + h)
        u1 = E * u + (h / 6.0) * (E * a1 + 2.0 * E2 * (a2 + a3) + a4)
        v1 = E * v + (h / 6.0) * (E * b1 + 2.0 * E2 * (b2 + b3) + b4)
        if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(v1))):
            raise IntegrationError(t + h, "non-finite values")
        return u1, v1


def step(state: SimState, dt: float, cfg: SimConfig) -> SimState:
    """Advance one step of size ``dt`` (may be negative when the nonlinearity is off)."""
    st = _Stepper(cfg)
    u = _dealiased(state.phi, st.mask)
    if state.v is None:
        u1 = st.step(u, state.t, dt)
        return SimState(state.t + dt, _to_field(cfg.grid, u1))
    u1, v1 = st.step_coupled(u, _dealiased(state.v, st.mask), state.t, dt)
    return SimState(state.t + dt, _to_field(cfg.grid, u1), _to_field(cfg.grid, v1))


def _event_times(cfg: SimConfig) -> list[float]:
    times = set(cfg.snapshot_times)
    if cfg.diag_every:
        k = int(np.floor(cfg.t_end / cfg.diag_every + 1e-9))
        times.update(round(i * cfg.diag_every, 12) for i in range(k + 1))
    times.add(0.0)
    times.add(cfg.t_end)
    return sorted(t for t in times if 0 <= t <= cfg.t_end)


def _integrate(cfg: SimConfig, coupled: bool, phi0: np.ndarray | None = None,
               v0: np.ndarray | None = None) -> Trajectory:
    st = _Stepper(cfg)
    grid = cfg.grid
    u = rfft(cfg.initial.values(grid)) * st.mask if phi0 is None else phi0
    v = None
    if coupled:
        vi = cfg.v_initial or InitialData(profile="zero")
        v = rfft(vi.values(grid)) * st.mask if v0 is None else v0
    snaps = set(cfg.snapshot_times) | {0.0, cfg.t_end} if not cfg.snapshot_times else set(cfg.snapshot_times)
    diag = set()
    if cfg.diag_every:
        k = int(np.floor(cfg.t_end / cfg.diag_every + 1e-9))
        diag = {round(i * cfg.diag_every, 12) for i in range(k + 1)}
    partition = DyadicPartition(grid)
    traj = Trajectory()
    t = 0.0
    for target in _event_times(cfg):
        while target - t > 1e-12:
            h = min(cfg.dt, target - t)
            if target - t - h < 1e-9 * cfg.dt:
                h = target - t
            if coupled:
                u, v = st.step_coupled(u, v, t, h)
            else:
                u = st.step(u, t, h)
            t = target if h == target - t else t + h
        phi = _to_field(grid, u)
        if any(abs(target - s) < 1e-9 for s in snaps):
            traj.snapshots.append(SimState(t, phi, _to_field(grid, v) if coupled else None))
        if any(abs(target - s) < 1e-9 for s in diag):
            traj.reports.append(energy_report(phi, t, cfg.norm_params, cfg.para, partition, cfg.margin))
            log.debug("t=%.3f mass=%.12g", t, traj.reports[-1].mass)
    return traj


def run(cfg: SimConfig) -> Trajectory:
    """Solve the front equation on ``[0, t_end]``.

    Snapshots are stored at ``snapshot_times`` (default: start and end);
    energy reports every ``diag_every`` time units.
    """
    return _integrate(cfg, coupled=False)


def run_coupled(cfg: SimConfig) -> Trajectory:
    """Co-evolve ``phi`` and the linearized variable ``v`` (from ``cfg.v_initial``)."""
    return _integrate(cfg, coupled=True)


@dataclass(frozen=True)
class LinearizationRow:
    eps: float
    error: float
    error_over_eps: float
    ratio: float | None


def linearization_check(cfg: SimConfig, eps_list: Sequence[float]) -> list[LinearizationRow]:
    """Compare ``(phi_eps - phi)/eps`` with ``v`` at ``t_end``.

    ``phi_eps`` starts from ``phi0 + eps v0``.  ``ratio`` is the error of the
    previous (larger) eps divided by this one.
    """
    base_cfg = replace(cfg, snapshot_times=(), diag_every=None)
    ref = run_coupled(base_cfg).final()
    grid, mask = cfg.grid, cfg.mask
    phi0 = rfft(cfg.initial.values(grid)) * mask
    v0 = rfft((cfg.v_initial or InitialData(profile="zero")).values(grid)) * mask
    rows, prev = [], None
    for eps in eps_list:
        pert = _integrate(base_cfg, coupled=False, phi0=phi0 + eps * v0).final().phi
        err = ((pert - ref.phi) / eps - ref.v).norm()
        rows.append(LinearizationRow(float(eps), float(err), float(err / eps),
                                     None if prev is None else float(prev / err)))
        prev = err
    return rows
