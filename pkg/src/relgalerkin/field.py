"""Spectral fields: coefficient vectors over a :class:`Spectrum`, norms and the action."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .eigenbasis import Grid, Spectrum, analyze_array, synthesize_array
from .errors import DomainMismatchError, ParameterError, SymbolError


@dataclass(frozen=True, eq=False)
class SpectralField:
    spectrum: Spectrum
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (self.spectrum.size,):
            raise DomainMismatchError(
                f"expected {self.spectrum.size} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, spectrum: Spectrum) -> "SpectralField":
        return cls(spectrum, np.zeros(spectrum.size))

    @classmethod
    def mode(cls, spectrum: Spectrum, k) -> "SpectralField":
        return cls(spectrum, spectrum.unit(k))

    def _other(self, other) -> np.ndarray:
        if isinstance(other, SpectralField):
            if not self.spectrum.is_compatible(other.spectrum):
                raise DomainMismatchError("fields live on different spectra")
            return other.coeffs
        return NotImplemented

    def __add__(self, other):
        c = self._other(other)
        return NotImplemented if c is NotImplemented else SpectralField(self.spectrum, self.coeffs + c)

    def __sub__(self, other):
        c = self._other(other)
        return NotImplemented if c is NotImplemented else SpectralField(self.spectrum, self.coeffs - c)

    def __mul__(self, t):
        return SpectralField(self.spectrum, float(t) * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.spectrum, -self.coeffs)

    def values(self, grid: Grid) -> np.ndarray:
        _check(self, grid)
        return synthesize_array(self.coeffs, grid)


def _check(u: SpectralField, grid: Grid) -> None:
    if not u.spectrum.is_compatible(grid.spectrum):
        raise DomainMismatchError("field and grid belong to different spectra")


def norm_L2(u: SpectralField) -> float:
    return float(np.linalg.norm(u.coeffs))


def power_integral(u: SpectralField, q: float, grid: Grid) -> float:
    """Quadrature value of ``int |u|^q dx``."""
    _check(u, grid)
    return grid.integrate(np.abs(synthesize_array(u.coeffs, grid)) ** q)


def norm_Lq(u: SpectralField, q: float, grid: Grid) -> float:
    if q < 1:
        raise ParameterError(f"q must be >= 1, got {q}")
    return power_integral(u, q, grid) ** (1.0 / q)


def quadratic_form(u: SpectralField, symbol: Callable[[np.ndarray], np.ndarray]) -> float:
    """``sum_k c_k**2 F(lambda_k)``."""
    vals = np.asarray(symbol(u.spectrum.eigenvalues), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise SymbolError("symbol is not finite on every retained eigenvalue")
    return float(np.sum(u.coeffs ** 2 * vals))


def signed_power(values: np.ndarray, p: float) -> np.ndarray:
    """Pointwise ``|v|^(p-1) v``, continuous extension 0 at v = 0."""
    a = np.abs(values)
    return np.sign(values) * a ** p


def nonlinear_power(u: SpectralField, p: float, grid: Grid) -> SpectralField:
    if p <= 1:
        raise ParameterError(f"p must exceed 1, got {p}")
    _check(u, grid)
    vals = synthesize_array(u.coeffs, grid)
    return SpectralField(u.spectrum, analyze_array(signed_power(vals, p), grid))


def kinetic_weights(spectrum: Spectrum, m: float) -> np.ndarray:
    """Per-mode symbol ``sqrt(lambda_k + m^2) - m`` in a cancellation-free form."""
    lam = spectrum.eigenvalues
    return lam / (np.sqrt(lam + m * m) + m)


def energy_parts(u: SpectralField, m: float, p: float, grid: Grid) -> tuple[float, float]:
    """Quadratic aggregate ``A = sum c_k^2 (mu_k - m)`` and ``B = int |u|^(p+1)``."""
    A = float(np.sum(u.coeffs ** 2 * kinetic_weights(u.spectrum, m)))
    B = power_integral(u, p + 1.0, grid)
    return A, B


def energy_Im(u: SpectralField, m: float, p: float, grid: Grid) -> float:
    """Action ``1/2 A(u) - B(u)/(p+1)``, nonlinear term taken with a minus sign."""
    if m < 0:
        raise ParameterError(f"mass must be >= 0, got {m}")
    if p <= 1:
        raise ParameterError(f"p must exceed 1, got {p}")
    A, B = energy_parts(u, m, p, grid)
    return 0.5 * A - B / (p + 1.0)


def energy_gradient(u: SpectralField, m: float, p: float, grid: Grid) -> np.ndarray:
    """Coefficient-space gradient of ``energy_Im``: ``c_k (mu_k - m) - (|u|^(p-1) u)_k``."""
    return u.coeffs * kinetic_weights(u.spectrum, m) - nonlinear_power(u, p, grid).coeffs


def quadrature_drift(u: SpectralField, p: float, grid: Grid) -> float:
    """Change in the projected nonlinearity when the grid is doubled (relative, L2)."""
    coarse = nonlinear_power(u, p, grid).coeffs
    fine = nonlinear_power(u, p, grid.refined(2)).coeffs
    scale = max(np.linalg.norm(fine), np.finfo(float).tiny)
    return float(np.linalg.norm(fine - coarse) / scale)
