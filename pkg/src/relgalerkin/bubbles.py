"""Whole-space extremals of the sharp H^(1/2) trace inequality and their checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import ParameterError, ToleranceError


def gamma(x: float) -> float:
    return math.gamma(x)


def gamma_self_check() -> float:
    """Largest relative error of ``gamma`` against exact integer/half-integer values."""
    worst = 0.0
    for k in range(0, 12):
        exact_int = float(math.factorial(k))  # Gamma(k+1)
        # Gamma(k + 1/2) = (2k)! sqrt(pi) / (4^k k!)
        exact_half = math.factorial(2 * k) * math.sqrt(math.pi) / (4 ** k * math.factorial(k))
        worst = max(worst, abs(gamma(k + 1.0) / exact_int - 1.0),
                    abs(gamma(k + 0.5) / exact_half - 1.0))
    return worst


def bubble_constant(n: int) -> float:
    """``c_n = 2^((n-1)/2) (Gamma((n+1)/2) / Gamma((n-1)/2))^((n-1)/2)``."""
    _check_dim(n)
    return 2.0 ** ((n - 1) / 2) * (gamma((n + 1) / 2) / gamma((n - 1) / 2)) ** ((n - 1) / 2)


def sharp_constant(n: int) -> float:
    """Best constant ``S_n`` of the fractional Sobolev / trace inequality."""
    _check_dim(n)
    return (2.0 ** -0.5 * math.pi ** -0.25
            * (gamma((n - 1) / 2) / gamma((n + 1) / 2)) ** 0.5
            * (gamma(n) / gamma(n / 2)) ** (1.0 / (2 * n)))


def sphere_area(n: int) -> float:
    """Measure of the unit sphere ``S^(n-1)``."""
    return 2.0 * math.pi ** (n / 2) / gamma(n / 2)


def _check_dim(n: int) -> None:
    if n < 2:
        raise ParameterError(f"bubbles need n >= 2, got {n}")


@dataclass(frozen=True)
class BubbleParams:
    n: int
    scale: float = 1.0
    center: tuple[float, ...] | None = None

    def __post_init__(self):
        _check_dim(self.n)
        if not self.scale > 0:
            raise ParameterError("bubble scale must be positive")
        c = (0.0,) * self.n if self.center is None else tuple(float(v) for v in self.center)
        if len(c) != self.n:
            raise ParameterError("centre has wrong dimension")
        object.__setattr__(self, "center", c)

    @property
    def cn(self) -> float:
        return bubble_constant(self.n)


def _r2(x, params: BubbleParams) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.sum((x - np.asarray(params.center)) ** 2, axis=-1)


def bubble_W(x, t, params: BubbleParams) -> np.ndarray:
    """``c_n (lam / (|x - xi|^2 + (t + lam)^2))^((n-1)/2)``; ``x`` has the coordinate last."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ParameterError("t must be >= 0")
    lam = params.scale
    return params.cn * (lam / (_r2(x, params) + (t + lam) ** 2)) ** ((params.n - 1) / 2)


def bubble_w(x, params: BubbleParams) -> np.ndarray:
    return bubble_W(x, 0.0, params)


def bubble_W_dt(x, t, params: BubbleParams) -> np.ndarray:
    """Analytic ``d/dt W``."""
    n, lam = params.n, params.scale
    t = np.asarray(t, dtype=float)
    D = _r2(x, params) + (t + lam) ** 2
    return -(n - 1) * params.cn * lam ** ((n - 1) / 2) * (t + lam) * D ** (-(n + 1) / 2)


def verify_entire_equation(params: BubbleParams, sample_points) -> float:
    """Max relative gap between ``-dW/dt(x, 0)`` and ``w(x)^((n+1)/(n-1))``."""
    n = params.n
    lhs = -bubble_W_dt(sample_points, 0.0, params)
    rhs = bubble_w(sample_points, params) ** ((n + 1) / (n - 1))
    return float(np.max(np.abs(lhs - rhs) / rhs))


def _fd_laplacian(params: BubbleParams, x: np.ndarray, t: float, h: float) -> float:
    n = params.n
    centre = bubble_W(x, t, params)
    total = 0.0
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        total += bubble_W(x + e, t, params) + bubble_W(x - e, t, params) - 2 * centre
    total += bubble_W(x, t + h, params) + bubble_W(x, t - h, params) - 2 * centre
    return float(total / (h * h))


@dataclass(frozen=True)
class HarmonicityTable:
    steps: tuple[float, ...]
    residuals: tuple[float, ...]
    order: float


def verify_harmonicity(params: BubbleParams, steps: Sequence[float] = (1e-1, 1e-2, 1e-3),
                       points=None) -> HarmonicityTable:
    """Central-difference Laplacian of ``W`` in ``R^(n+1)`` and its fitted order in ``h``."""
    n = params.n
    if points is None:
        c = np.asarray(params.center)
        lam = params.scale
        points = [(c + 0.3 * lam * np.linspace(0.5, 1.0, n), lam),
                  (c + np.r_[0.7 * lam, np.zeros(n - 1)], 0.5 * lam)]
    res = []
    for h in steps:
        worst = 0.0
        for x, t in points:
            if t - h <= 0:
                raise ParameterError("stencil leaves the half-space; use t > h")
            worst = max(worst, abs(_fd_laplacian(params, np.asarray(x, float), t, h)))
        res.append(worst)
    order = float(np.polyfit(np.log(steps), np.log(res), 1)[0])
    return HarmonicityTable(tuple(steps), tuple(res), order)


@dataclass(frozen=True)
class SharpNormCheck:
    n: int
    integral: float
    target: float
    rel_error: float


def sharp_norm_integral(n: int, tol: float = 1e-12) -> float:
    """``int_{R^n} w_{1,0}^(2n/(n-1)) dx`` by the radial substitution ``r = tan(theta)``."""
    cn = bubble_constant(n)
    # w^(2n/(n-1)) = cn^(2n/(n-1)) (1+r^2)^(-n); with r = tan: sin^(n-1) cos^(n-1) dtheta
    def integrand(theta):
        return (math.sin(theta) * math.cos(theta)) ** (n - 1)
    val, err = integrate.quad(integrand, 0.0, math.pi / 2, epsabs=0.0, epsrel=tol, limit=200)
    if err > 10 * tol * abs(val):
        raise ToleranceError(f"radial quadrature error {err:.2e} above tolerance")
    return cn ** (2 * n / (n - 1)) * sphere_area(n) * val


def sharp_norm_check(n: int, tol: float = 1e-12) -> SharpNormCheck:
    integral = sharp_norm_integral(n, tol)
    target = sharp_constant(n) ** (-2 * n)
    return SharpNormCheck(n, integral, target, abs(integral - target) / target)
