"""Singular-kernel quadrature for the front nonlinearity and its symbols.

All y-integrals are evaluated on a mirrored graded mesh that excludes
``y = 0``.  Shifts ``f(x + y)`` are spectral, so nodes need not lie on the
x-grid.  Sums run over nodes in ascending ``|y|``, with the ``+y`` term
added before the ``-y`` term, which fixes the floating-point reduction order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .spectral import DISPERSION, Field, Grid1D, apply_multiplier, irfft, rfft


class DealiasingWarning(UserWarning):
    """Input spectrum reaches beyond the band where products are alias-free."""


def f_profile(s):
    """``F(s) = 1 - (1 + s^2)^(-1/2)`` in a cancellation-free form."""
    s = np.asarray(s)
    r = np.sqrt(1.0 + s * s)
    return s * s / (r * (1.0 + r))


def f_profile_deriv(s):
    s = np.asarray(s)
    return s / (1.0 + s * s) ** 1.5


@dataclass(frozen=True)
class QuadratureMesh:
    """Positive nodes ``y_j`` and trapezoid weights; the negative half mirrors them."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        y, w = np.asarray(self.nodes, float), np.asarray(self.weights, float)
        if y.ndim != 1 or y.shape != w.shape or y.size < 2:
            raise ValueError("nodes and weights must be matching 1-D arrays")
        if y[0] <= 0 or np.any(np.diff(y) <= 0) or np.any(w <= 0):
            raise ValueError("nodes must be positive and increasing with positive weights")

    @classmethod
    def graded(cls, y_min: float, y_max: float, ratio: float = 1.08,
               h_max: float | None = None, tail_ratio: float | None = None) -> "QuadratureMesh":
        """Geometric refinement toward 0, spacing ``(ratio-1) y``.

        ``h_max`` caps the spacing; ``tail_ratio`` (< ratio) lets it grow
        geometrically again once ``(tail_ratio-1) y`` exceeds the cap.
        """
        if not 0 < y_min < y_max:
            raise ValueError("need 0 < y_min < y_max")
        if ratio <= 1:
            raise ValueError("ratio must exceed 1")
        if tail_ratio is not None and not 1 < tail_ratio <= ratio:
            raise ValueError("tail_ratio must lie in (1, ratio]")
        cap = np.inf if h_max is None else h_max
        ys = [y_min]
        while ys[-1] < y_max:
            y = ys[-1]
            far = cap if tail_ratio is None else max(cap, (tail_ratio - 1) * y)
            ys.append(y + min((ratio - 1) * y, far))
        ys = np.array(ys)
        ys[-1] = y_max
        if ys.size > 2 and ys[-1] - ys[-2] < 0.25 * (ys[-2] - ys[-3]):
            ys = np.delete(ys, -2)
        w = np.empty_like(ys)
        w[1:-1] = 0.5 * (ys[2:] - ys[:-2])
        w[0] = 0.5 * (ys[1] - ys[0])
        w[-1] = 0.5 * (ys[-1] - ys[-2])
        return cls(ys, w)

    @classmethod
    def for_grid(cls, grid: Grid1D, y_max: float | None = None, ratio: float = 1.08,
                 h_max: float | None = None, tail_ratio: float | None = 1.04) -> "QuadratureMesh":
        """Default mesh for field integrals: ``y_min = dx/4``, ``y_max = L/2``."""
        return cls.graded(grid.dx / 4, grid.box_length / 2 if y_max is None else y_max,
                          ratio=ratio, h_max=grid.dx / 2 if h_max is None else h_max,
                          tail_ratio=tail_ratio)

    @classmethod
    def for_symbols(cls, y_max: float = 1e4) -> "QuadratureMesh":
        """Default mesh for grid-free symbol integrals."""
        return cls.graded(1e-4, y_max, ratio=1.005, h_max=0.005)

    @property
    def y_min(self) -> float:
        return float(self.nodes[0])

    @property
    def y_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def size(self) -> int:
        return 2 * self.nodes.size

    def symmetric(self) -> tuple[np.ndarray, np.ndarray]:
        """Full node/weight arrays in reference order ``+y1, -y1, +y2, -y2, ...``."""
        y = np.empty(self.size)
        y[0::2], y[1::2] = self.nodes, -self.nodes
        w = np.repeat(self.weights, 2)
        return y, w

    def check_grid(self, grid: Grid1D):
        if self.y_max > grid.box_length / 2 * (1 + 1e-12):
            raise ValueError(f"mesh y_max={self.y_max:g} exceeds half the box "
                             f"({grid.box_length / 2:g}); periodic wrap would double count")


def _shifted(values: np.ndarray, grid: Grid1D, ys: np.ndarray) -> np.ndarray:
    """Rows ``values(x + y_i)``; real input uses real transforms."""
    if np.iscomplexobj(values):
        spec = np.fft.fft(values)
        spec[grid.nyquist_index] = 0.0
        return np.fft.ifft(spec[None, :] * np.exp(1j * np.outer(ys, grid.k)), axis=1)
    spec = rfft(values)
    spec[-1] = 0.0
    return irfft(spec[None, :] * np.exp(1j * np.outer(ys, grid.rk)), grid.n, axis=1)


def _check_y(y):
    if y == 0 or not np.isfinite(y):
        raise ValueError("difference quotient needs a finite nonzero y")


def dq(f: Field, y: float) -> Field:
    """``(f(x + y) - f(x)) / y``."""
    _check_y(y)
    shifted = _shifted(f.values, f.grid, np.array([y]))[0]
    return Field(f.grid, values=(shifted - f.values) / y)


def dq_abs(f: Field, y: float) -> Field:
    """``(f(x + y) - f(x)) / |y|``."""
    _check_y(y)
    shifted = _shifted(f.values, f.grid, np.array([y]))[0]
    return Field(f.grid, values=(shifted - f.values) / abs(y))


def _node_chunks(mesh: QuadratureMesh, n: int, budget: int = 2**21):
    ys, ws = mesh.symmetric()
    step = max(2, (budget // n) & ~1)
    for i in range(0, ys.size, step):
        yield ys[i:i + step], ws[i:i + step]


def _integrate(integrand, grid: Grid1D, mesh: QuadratureMesh, dtype=float) -> np.ndarray:
    acc = np.zeros(grid.n, dtype=dtype)
    for ys, ws in _node_chunks(mesh, grid.n):
        vals = integrand(ys)
        acc = acc + np.sum(ws[:, None] * vals, axis=0)
    return acc


def eval_Q(f: Field, g: Field, mesh: QuadratureMesh) -> Field:
    """``Q(f, g) = int F(delta^y f) |delta|^y g dy`` by graded quadrature."""
    grid = f.grid
    if g.grid != grid:
        raise ValueError("fields live on different grids")
    mesh.check_grid(grid)
    fv, gv = f.values, g.values

    def integrand(ys):
        fs = _shifted(fv, grid, ys)
        gs = _shifted(gv, grid, ys)
        return f_profile((fs - fv) / ys[:, None]) * (gs - gv) / np.abs(ys)[:, None]

    dtype = complex if np.iscomplexobj(fv) or np.iscomplexobj(gv) else float
    return Field(grid, values=_integrate(integrand, grid, mesh, dtype))


def eval_Omega_quad(psi, v: Field, mesh: QuadratureMesh) -> Field:
    """``Omega(psi, v) = int delta^y psi |delta|^y v dy``.

    ``psi`` is a :class:`~sqg_front_lab.paradiff.PsiDecomp`; the linear part
    contributes exactly ``slope`` to every difference quotient.
    """
    grid = v.grid
    mesh.check_grid(grid)
    pv, vv, c = psi.periodic.values, v.values, psi.slope

    def integrand(ys):
        ps = _shifted(pv, grid, ys)
        vs = _shifted(vv, grid, ys)
        return ((ps - pv) / ys[:, None] + c) * (vs - vv) / np.abs(ys)[:, None]

    return Field(grid, values=_integrate(integrand, grid, mesh))


def slope_symbol(xi, mesh: QuadratureMesh):
    """Mesh realization of ``int (e^{i xi y} - 1)/|y| dy`` (the slope channel)."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    y, w = mesh.nodes, mesh.weights
    out = np.array([np.sum(w * 2.0 * (np.cos(x * y) - 1.0) / y) for x in xi])
    return out


def _band_ok(f: Field, limit_index: float) -> bool:
    idx = np.abs(np.fft.fftfreq(f.grid.n, d=1.0 / f.grid.n))
    spec = np.abs(f.spectrum)
    top = spec.max()
    return top == 0 or spec[idx > limit_index].max(initial=0.0) <= 1e-12 * top


def eval_Omega_spectral(f: Field, g: Field) -> Field:
    """``(omega(D) f) g + f (omega(D) g) - omega(D)(f g)``.

    Exact realization of the resonance symbol for inputs band-limited to
    ``|k| <= n/3``; wider inputs raise :class:`DealiasingWarning`.
    """
    if g.grid != f.grid:
        raise ValueError("fields live on different grids")
    lim = f.grid.n / 3
    if not (_band_ok(f, lim) and _band_ok(g, lim)):
        warnings.warn("inputs exceed the n/3 band; product is aliased", DealiasingWarning,
                      stacklevel=2)
    wf = apply_multiplier(f, DISPERSION)
    wg = apply_multiplier(g, DISPERSION)
    return wf * g + f * wg - apply_multiplier(f * g, DISPERSION)


def omega_symbol_closed(xi1, xi2):
    """Resonance function ``omega(xi1) + omega(xi2) - omega(xi1 + xi2)``."""
    from .spectral import omega

    xi1, xi2 = np.asarray(xi1, float), np.asarray(xi2, float)
    return omega(xi1) + omega(xi2) - omega(xi1 + xi2)


def _check_truncation(truncation, mesh: QuadratureMesh):
    if truncation is None:
        return
    lo, hi = truncation
    if not np.isclose(lo, -hi, rtol=1e-14, atol=0) or not np.isclose(hi, mesh.y_max, rtol=1e-12):
        raise ValueError(f"truncation {truncation} is not symmetric about 0 at the mesh "
                         f"radius {mesh.y_max:g}; the constant term would not cancel")


def omega_symbol_quad(xi1, xi2, mesh: QuadratureMesh | None = None, truncation=None):
    """Quadrature of ``int sgn(y) (e^{i xi1 y}-1)(e^{i xi2 y}-1) / y^2 dy``.

    Vectorised over broadcastable ``xi1, xi2``.  The mirrored node set makes
    the real part cancel identically.
    """
    mesh = mesh or QuadratureMesh.for_symbols()
    _check_truncation(truncation, mesh)
    a, b = np.broadcast_arrays(np.asarray(xi1, float), np.asarray(xi2, float))
    if np.any(a == 0) or np.any(b == 0):
        raise ValueError("quadrature needs nonzero frequencies; use the closed form at 0")
    y, w = mesh.nodes, mesh.weights
    inv_y2 = 1.0 / (y * y)
    tables = {}

    def e(c):
        if c not in tables:
            tables[c] = np.exp(1j * c * y)
        return tables[c]

    out = np.empty(a.shape, dtype=complex)
    for idx in np.ndindex(a.shape):
        p = (e(float(a[idx])) - 1.0) * (e(float(b[idx])) - 1.0) * inv_y2
        # node -y contributes sgn(-y) * conj(p)
        out[idx] = np.sum(w * p) + np.sum(w * -np.conj(p))
    return out if out.ndim else out[()]


def eval_Q_cubic(phi: Field, mesh: QuadratureMesh) -> Field:
    """``(1/3) int sgn(y) |delta^y phi|^2 delta^y phi dy``; accepts complex fields."""
    grid = phi.grid
    mesh.check_grid(grid)
    pv = phi.values

    def integrand(ys):
        d = (_shifted(pv, grid, ys) - pv) / ys[:, None]
        return np.sign(ys)[:, None] * np.abs(d) ** 2 * d / 3.0

    dtype = complex if np.iscomplexobj(pv) else float
    return Field(grid, values=_integrate(integrand, grid, mesh, dtype))


def q_coefficient(xi, mesh: QuadratureMesh | None = None):
    """Cubic-form symbol on a plane wave, ``Q(e^{i xi x}) = q(xi) e^{i xi x}``.

    ``q(xi) = (1/3) int sgn(y) |e^{i xi y}-1|^2 (e^{i xi y}-1) / y^3 dy``, real by
    parity.  Negative ``xi`` uses the even extension ``q(|xi|)``; ``q(0) = 0``.
    Returns the complex quadrature value so callers can inspect the residual
    imaginary part.
    """
    mesh = mesh or QuadratureMesh.for_symbols()
    xs = np.atleast_1d(np.abs(np.asarray(xi, dtype=float)))
    y, w = mesh.nodes, mesh.weights
    out = np.zeros(xs.shape, dtype=complex)
    for i, x in enumerate(xs):
        if x == 0:
            continue
        e = np.exp(1j * x * y)
        p = np.abs(e - 1.0) ** 2 * (e - 1.0) / (3.0 * y**3)
        pm = np.abs(np.conj(e) - 1.0) ** 2 * (np.conj(e) - 1.0) / (3.0 * y**3)
        # sgn(-y) / (-y)^3 = 1 / y^3
        out[i] = np.sum(w * p) + np.sum(w * pm)
    return out if np.ndim(xi) else out[0]
