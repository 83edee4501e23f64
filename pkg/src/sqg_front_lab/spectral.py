"""Periodic grid, Fourier multipliers and Littlewood-Paley blocks.

Conventions used throughout the package:

* the grid is box-centred, ``x_j = -L/2 + j*dx``;
* spectra are unnormalised DFT coefficients in FFT order (``numpy.fft``);
* L^2 norms are box integrals ``dx * sum |f_j|^2`` so that they approximate
  real-line norms for localized data;
* the Nyquist mode is zeroed by every multiplier application.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft as sfft


def fft_workers() -> int:
    """Thread cap for FFTs, read from ``SQG_LAB_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("SQG_LAB_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Grid1D:
    n: int
    box_length: float = 2 * np.pi

    def __post_init__(self):
        if self.n < 16 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 16, got {self.n}")
        if not self.box_length > 0:
            raise ValueError(f"box_length must be positive, got {self.box_length}")

    @property
    def dx(self) -> float:
        return self.box_length / self.n

    @property
    def dk(self) -> float:
        return 2 * np.pi / self.box_length

    @cached_property
    def x(self) -> np.ndarray:
        return -0.5 * self.box_length + self.dx * np.arange(self.n)

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order; index ``n//2`` is the Nyquist mode."""
        return self.dk * np.fft.fftfreq(self.n, d=1.0 / self.n)

    @cached_property
    def rk(self) -> np.ndarray:
        """Non-negative wavenumbers matching ``rfft`` output."""
        return self.dk * np.arange(self.n // 2 + 1)

    @property
    def frequencies(self) -> np.ndarray:
        """Wavenumbers sorted ascending, ``k in [-n/2, n/2)``."""
        return np.fft.fftshift(self.k)

    @property
    def nyquist_index(self) -> int:
        return self.n // 2

    def band_mask(self, fraction: float) -> np.ndarray:
        """Boolean mask (FFT order) keeping ``|k| <= fraction * n/2`` in index units."""
        idx = np.abs(np.fft.fftfreq(self.n, d=1.0 / self.n))
        mask = idx <= fraction * (self.n // 2)
        mask[self.nyquist_index] = False
        return mask


class Field:
    """Immutable sampled function with a lazily synchronised spectrum.

    Real fields are the common case; complex values are allowed for the
    wave-packet and complexified cubic-form computations.
    """

    __slots__ = ("grid", "_values", "_spectrum")

    def __init__(self, grid: Grid1D, values=None, spectrum=None):
        if (values is None) == (spectrum is None):
            raise ValueError("give exactly one of values or spectrum")
        self.grid = grid
        self._values = None
        self._spectrum = None
        if values is not None:
            arr = np.array(values)
            if arr.shape != (grid.n,):
                raise ValueError(f"expected {grid.n} samples, got shape {arr.shape}")
            if not np.iscomplexobj(arr):
                arr = arr.astype(float)
            arr.setflags(write=False)
            self._values = arr
        else:
            arr = np.array(spectrum, dtype=complex)
            if arr.shape != (grid.n,):
                raise ValueError(f"expected {grid.n} coefficients, got shape {arr.shape}")
            arr.setflags(write=False)
            self._spectrum = arr

    @classmethod
    def from_spectrum(cls, grid: Grid1D, spectrum, real: bool = True) -> "Field":
        spectrum = np.asarray(spectrum, dtype=complex)
        values = np.fft.ifft(spectrum)
        if real:
            values = values.real
        out = cls(grid, values=values)
        if not real:
            spectrum = spectrum.copy()
            spectrum.setflags(write=False)
            out._spectrum = spectrum
        return out

    @classmethod
    def from_function(cls, grid: Grid1D, func: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return cls(grid, values=func(grid.x))

    @classmethod
    def zeros(cls, grid: Grid1D) -> "Field":
        return cls(grid, values=np.zeros(grid.n))

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = np.fft.ifft(self._spectrum)
            self._values.setflags(write=False)
        return self._values

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            s = np.fft.fft(self._values)
            s.setflags(write=False)
            self._spectrum = s
        return self._spectrum

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    def _same_grid(self, other: "Field"):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, Field):
            self._same_grid(other)
            return Field(self.grid, values=self.values + other.values)
        return Field(self.grid, values=self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Field):
            self._same_grid(other)
            return Field(self.grid, values=self.values - other.values)
        return Field(self.grid, values=self.values - other)

    def __neg__(self):
        return Field(self.grid, values=-self.values)

    def __mul__(self, other):
        if isinstance(other, Field):
            self._same_grid(other)
            return Field(self.grid, values=self.values * other.values)
        return Field(self.grid, values=self.values * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Field):
            self._same_grid(other)
            return Field(self.grid, values=self.values / other.values)
        return Field(self.grid, values=self.values / other)

    def __repr__(self):
        kind = "real" if self.is_real else "complex"
        return f"Field({kind}, n={self.grid.n}, L={self.grid.box_length:g})"

    def mean(self):
        return self.values.mean()

    def inner(self, other: "Field"):
        """Box L^2 inner product, conjugate-linear in ``other``."""
        self._same_grid(other)
        return self.grid.dx * np.sum(self.values * np.conj(other.values))

    def norm(self) -> float:
        return float(np.sqrt(self.grid.dx * np.sum(np.abs(self.values) ** 2)))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def conj(self) -> "Field":
        return Field(self.grid, values=np.conj(self.values))


@dataclass(frozen=True)
class Multiplier:
    """Fourier multiplier ``f -> m(D) f`` with an explicit value at ``xi = 0``.

    ``real`` declares ``m(-xi) = conj(m(xi))`` so real inputs stay real.
    """

    symbol: Callable[[np.ndarray], np.ndarray]
    zero_mode: complex = 0.0
    real: bool = True

    def on(self, grid: Grid1D) -> np.ndarray:
        k = grid.k
        nz = k != 0
        out = np.zeros(grid.n, dtype=complex)
        with np.errstate(all="ignore"):
            out[nz] = self.symbol(k[nz])
        out[~nz] = self.zero_mode
        out[grid.nyquist_index] = 0.0
        if not np.all(np.isfinite(out)):
            bad = k[~np.isfinite(out)]
            raise ValueError(f"multiplier is not finite at xi = {bad[:4]}")
        return out

    def __mul__(self, other: "Multiplier") -> "Multiplier":
        a, b = self, other
        return Multiplier(lambda xi: a.symbol(xi) * b.symbol(xi),
                          zero_mode=a.zero_mode * b.zero_mode, real=a.real and b.real)


def omega(xi):
    """Dispersion symbol ``2 i xi log|xi|`` with ``omega(0) = 0``."""
    xi = np.asarray(xi, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 2j * xi * np.log(np.abs(xi))
    return np.where(xi == 0, 0.0, out)


IDENTITY = Multiplier(lambda xi: np.ones_like(xi, dtype=complex), zero_mode=1.0)
DERIVATIVE = Multiplier(lambda xi: 1j * xi, zero_mode=0.0)
LOG_ABS = Multiplier(lambda xi: np.log(np.abs(xi)) + 0j, zero_mode=0.0)
DISPERSION = Multiplier(omega, zero_mode=0.0)


def propagator(t: float) -> Multiplier:
    return Multiplier(lambda xi: np.exp(t * omega(xi)), zero_mode=1.0)


def abs_power(s: float) -> Multiplier:
    return Multiplier(lambda xi: np.abs(xi) ** s + 0j, zero_mode=0.0)


def shift(y: float) -> Multiplier:
    """``f(x) -> f(x + y)``, exact for band-limited data and any real ``y``."""
    return Multiplier(lambda xi: np.exp(1j * xi * y), zero_mode=1.0)


def apply_multiplier(f: Field, m: Multiplier) -> Field:
    vals = m.on(f.grid)
    return Field.from_spectrum(f.grid, f.spectrum * vals, real=f.is_real and m.real)


def derivative(f: Field) -> Field:
    return apply_multiplier(f, DERIVATIVE)


def log_dispersion(f: Field) -> Field:
    """Apply ``2 log|D| d/dx``; symbol ``omega``."""
    return apply_multiplier(f, DISPERSION)


def linear_propagate(f: Field, t: float) -> Field:
    """Exact linear flow ``exp(t omega(D))``."""
    if not np.isfinite(t):
        raise ValueError(f"propagation time must be finite, got {t}")
    return apply_multiplier(f, propagator(t))


def frac_power(f: Field, s: float) -> Field:
    """``|D|^s`` with the zero mode annihilated; ``s`` restricted to [-4, 6]."""
    if not -4.0 <= s <= 6.0:
        raise ValueError(f"exponent s={s} outside [-4, 6]")
    return apply_multiplier(f, abs_power(s))


def antiderivative(f: Field) -> tuple[Field, float]:
    """Mean-zero inverse derivative of ``f - mean(f)``, plus that mean."""
    mean = f.values.mean()
    inv = Multiplier(lambda xi: 1.0 / (1j * xi), zero_mode=0.0)
    g = apply_multiplier(f, inv)
    return g, (float(mean.real) if f.is_real else mean)


def smooth_step(r):
    """C-infinity monotone step: 1 for ``r <= 1``, 0 for ``r >= 2``."""
    r = np.asarray(r, dtype=float)

    def g(z):
        out = np.zeros_like(z)
        pos = z > 0
        out[pos] = np.exp(-1.0 / z[pos])
        return out

    a, b = g(2.0 - r), g(r - 1.0)
    return a / (a + b)


class DyadicPartition:
    """Littlewood-Paley partition over dyadic frequencies ``lambda = 2^j``.

    Interior blocks are ``p(|xi|/lam) - p(2|xi|/lam)`` with ``p = smooth_step``,
    supported in ``[lam/2, 2 lam]`` and equal to 1 at ``|xi| = lam``.  The
    lowest covered block also absorbs every lower nonzero frequency and the
    highest absorbs everything above it, so the blocks sum to 1 on all nonzero
    grid frequencies.  Covered range: ``[4 dk, n/8 dk]``.
    """

    def __init__(self, grid: Grid1D):
        self.grid = grid
        lo = 4 * grid.dk
        hi = grid.n / 8 * grid.dk
        j0 = int(np.ceil(np.log2(lo) - 1e-12))
        j1 = int(np.floor(np.log2(hi) + 1e-12))
        if j1 < j0:
            raise ValueError("grid too small to carry any dyadic block")
        self.lambdas = tuple(float(2.0**j) for j in range(j0, j1 + 1))
        self._cache = {}

    @property
    def lam_min(self) -> float:
        return self.lambdas[0]

    @property
    def lam_max(self) -> float:
        return self.lambdas[-1]

    def _check(self, lam):
        if not any(np.isclose(lam, m, rtol=1e-12, atol=0) for m in self.lambdas):
            raise ValueError(f"lambda={lam} is not a covered dyadic frequency "
                             f"(covered {self.lam_min:g}..{self.lam_max:g})")
        return min(self.lambdas, key=lambda m: abs(m - lam))

    def bump(self, lam: float, xi) -> np.ndarray:
        lam = self._check(lam)
        a = np.abs(np.asarray(xi, dtype=float))
        upper = np.ones_like(a) if lam == self.lam_max else smooth_step(a / lam)
        lower = np.zeros_like(a) if lam == self.lam_min else smooth_step(2 * a / lam)
        out = upper - lower
        return np.where(a == 0, 0.0, out)

    def weights(self, lam: float) -> np.ndarray:
        lam = self._check(lam)
        if lam not in self._cache:
            w = self.bump(lam, self.grid.k)
            w[self.grid.nyquist_index] = 0.0
            w.setflags(write=False)
            self._cache[lam] = w
        return self._cache[lam]

    def low_weights(self, lam: float) -> np.ndarray:
        lam = self._check(lam)
        w = sum(self.weights(m) for m in self.lambdas if m <= lam)
        w = np.array(w)
        w[0] = 1.0
        return w

    def project(self, f: Field, lam: float) -> Field:
        return Field.from_spectrum(f.grid, f.spectrum * self.weights(lam), real=f.is_real)

    def low(self, f: Field, lam: float) -> Field:
        return Field.from_spectrum(f.grid, f.spectrum * self.low_weights(lam), real=f.is_real)


def lp_project(f: Field, lam: float, partition: DyadicPartition | None = None) -> Field:
    return (partition or DyadicPartition(f.grid)).project(f, lam)


def lp_low(f: Field, lam: float, partition: DyadicPartition | None = None) -> Field:
    return (partition or DyadicPartition(f.grid)).low(f, lam)


def rfft(values: np.ndarray, axis: int = -1) -> np.ndarray:
    return sfft.rfft(values, axis=axis, workers=fft_workers())


def irfft(spec: np.ndarray, n: int, axis: int = -1) -> np.ndarray:
    return sfft.irfft(spec, n=n, axis=axis, workers=fft_workers())
