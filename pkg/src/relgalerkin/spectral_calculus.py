"""Functional calculus ``F(-Delta)`` and numerical checks of the symbol bounds.

The symbols compared here are

    P_m(lam)   = 2 m (sqrt(lam + m^2) - m) + chi(lam)
    P_inf(lam) = lam + chi(lam)

with ``chi`` a C^2 bump equal to 1 below ``lambda_1/2`` and 0 above ``lambda_1``, so
that ``chi(-Delta)`` vanishes on every Dirichlet mode.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ParameterError, SymbolError
from .field import SpectralField


def smoothstep5(s: np.ndarray) -> np.ndarray:
    s = np.clip(s, 0.0, 1.0)
    return s ** 3 * (10.0 - 15.0 * s + 6.0 * s * s)


def bump(lam, lambda1: float) -> np.ndarray:
    """``chi``: 1 on ``[0, lambda1/2]``, 0 on ``[lambda1, inf)``, quintic in between."""
    lam = np.asarray(lam, dtype=float)
    # smoothstep(1 - s) rather than 1 - smoothstep(s): stays inside [0, 1] in floating point
    return smoothstep5((lambda1 - lam) / (0.5 * lambda1))


def two_m_Pm(lam, m: float) -> np.ndarray:
    """``2 m (sqrt(lam + m^2) - m)`` written as ``2 m lam / (sqrt(lam + m^2) + m)``."""
    lam = np.asarray(lam, dtype=float)
    return 2.0 * m * lam / (np.sqrt(lam + m * m) + m)


@dataclass(frozen=True)
class SymbolSet:
    m: float
    lambda1: float

    def __post_init__(self):
        if self.m <= 0:
            raise ParameterError(f"mass must be positive, got {self.m}")
        if self.lambda1 <= 0:
            raise ParameterError("lambda1 must be positive")

    def chi(self, lam):
        return bump(lam, self.lambda1)

    def P_m(self, lam):
        return two_m_Pm(lam, self.m) + self.chi(lam)

    def P_inf(self, lam):
        lam = np.asarray(lam, dtype=float)
        return lam + self.chi(lam)

    def ratio(self, lam):
        return self.P_m(lam) / self.P_inf(lam)

    def inverse_difference(self, lam):
        return 1.0 / self.P_inf(lam) - 1.0 / self.P_m(lam)

    def lower_bound(self) -> float:
        return min(1.0, float(two_m_Pm(0.5 * self.lambda1, self.m)))


def inverse_difference_exact(lam, m: float) -> np.ndarray:
    """Closed form of ``1/P_inf - 1/P_m`` valid where ``chi = 0`` (``lam >= lambda1``)."""
    lam = np.asarray(lam, dtype=float)
    return -1.0 / (2.0 * m * (np.sqrt(lam + m * m) + m))


def apply_multiplier(F: Callable[[np.ndarray], np.ndarray], u: SpectralField) -> SpectralField:
    lam = u.spectrum.eigenvalues
    vals = np.asarray(F(lam), dtype=float) * np.ones_like(lam)
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        k = tuple(int(v) for v in u.spectrum.modes[bad[0]])
        raise SymbolError(f"multiplier not finite at mode {k} (lambda={lam[bad[0]]:.6g})")
    return SpectralField(u.spectrum, vals * u.coeffs)


def _check_mass(m: float) -> None:
    if not m > 0:
        raise ParameterError(f"mass must be positive, got {m}")


def apply_Pm(u: SpectralField, m: float) -> SpectralField:
    """``(sqrt(-Delta + m^2) - m) u``."""
    _check_mass(m)
    return apply_multiplier(lambda lam: two_m_Pm(lam, m) / (2.0 * m), u)


def apply_2mPm(u: SpectralField, m: float) -> SpectralField:
    _check_mass(m)
    return apply_multiplier(lambda lam: two_m_Pm(lam, m), u)


def invert_2mPm(f: SpectralField, m: float) -> SpectralField:
    _check_mass(m)
    return apply_multiplier(lambda lam: 1.0 / two_m_Pm(lam, m), f)


def default_lambda_grid(lambda1: float, points: int = 200, upper: float = 1e6) -> np.ndarray:
    return np.geomspace(1e-3 * lambda1, upper, points)


@dataclass(frozen=True)
class BoundRow:
    quantity: str  # "ratio" (P_m/P_inf) or "inverse_difference"
    k: int
    m: float
    constant: float


def _derivative(f: Callable, lam: np.ndarray, k: int, rel_step: float) -> np.ndarray:
    if k == 0:
        return f(lam)
    h = rel_step * lam
    if k == 1:
        return (f(lam + h) - f(lam - h)) / (2.0 * h)
    if k == 2:
        return (f(lam + h) - 2.0 * f(lam) + f(lam - h)) / (h * h)
    raise ParameterError("derivative order must be <= 2")


STEP = {1: 1e-5, 2: 1e-3}


def check_symbol_derivative_bounds(
    k_max: int,
    m_list: Iterable[float],
    lam_grid: Sequence[float],
    lambda1: float,
) -> list[BoundRow]:
    """Empirical constants in the symbol derivative bounds.

    For each ``k <= k_max`` and mass ``m`` reports

    * ``sup lam^k |d^k (P_m/P_inf)|``
    * ``sup lam^k |d^k (1/P_inf - 1/P_m)| / min(1/m^2, 1/(m sqrt(lam+1)))``

    with derivatives taken by central differences.
    """
    if k_max > 2 or k_max < 0:
        raise ParameterError("k_max must be 0, 1 or 2")
    lam = np.asarray(lam_grid, dtype=float)
    if np.any(lam <= 0):
        raise ParameterError("lambda grid must be positive")
    rows = []
    for m in m_list:
        if m < 2:
            raise ParameterError(f"masses must be >= 2, got {m}")
        sym = SymbolSet(float(m), lambda1)
        envelope = np.minimum(1.0 / m ** 2, 1.0 / (m * np.sqrt(lam + 1.0)))
        for k in range(k_max + 1):
            step = STEP.get(k, 0.0)
            r = lam ** k * np.abs(_derivative(sym.ratio, lam, k, step))
            d = lam ** k * np.abs(_derivative(sym.inverse_difference, lam, k, step)) / envelope
            rows.append(BoundRow("ratio", k, float(m), float(r.max())))
            rows.append(BoundRow("inverse_difference", k, float(m), float(d.max())))
    return rows


def inverse_difference_derivative_exact(lam, m: float) -> np.ndarray:
    """``d/dlam`` of :func:`inverse_difference_exact` (validates the k=1 step)."""
    lam = np.asarray(lam, dtype=float)
    s = np.sqrt(lam + m * m)
    return 1.0 / (4.0 * m * s * (s + m) ** 2)


def log_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
