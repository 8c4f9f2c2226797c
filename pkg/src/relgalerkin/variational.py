"""Least-energy solutions by Nehari-manifold descent, plus the level-bound experiments."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import bubbles
from .cylinder import (nehari_identity_residual, pohozaev_residual,
                       trace_coercivity_check)
from .eigenbasis import Domain, Grid, Spectrum, analyze_array, enumerate_modes, make_grid, synthesize_array
from .errors import GeometryError, NumericalBlowupError, ParameterError
from .field import SpectralField, kinetic_weights, signed_power
from .spectral_calculus import smoothstep5

log = logging.getLogger(__name__)

ROUNDOFF = 16 * np.finfo(float).eps


@dataclass
class SolverConfig:
    N: int = 12
    max_iter: int = 5000
    tol: float = 1e-9
    step0: float = 1.0
    max_step: float = 1.0
    armijo: float = 1e-4
    shrink: float = 0.5
    min_step: float = 1e-12
    initial: str = "eigenfunction"  # or "random"
    perturbation: float = 0.1
    seed: int = 0
    diagnostics: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ParameterError("tolerance must be positive")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be >= 1")
        if self.initial not in ("eigenfunction", "random"):
            raise ParameterError(f"unknown initial guess {self.initial!r}")


@dataclass
class SolveReport:
    solution: SpectralField
    m: float
    p: float
    energy: float
    nehari_value: float
    quadratic_part: float
    residual: float
    gradient_norm: float
    converged: bool
    iterations: int
    trace: list[float] = field(default_factory=list, repr=False)
    diagnostics: dict = field(default_factory=dict)
    sign_definite: bool = False
    min_over_max: float = float("nan")

    def summary(self) -> dict:
        return {
            "m": self.m, "p": self.p, "N": self.solution.spectrum.N,
            "energy": self.energy, "nehari_value": self.nehari_value,
            "residual": self.residual, "gradient_norm": self.gradient_norm,
            "converged": self.converged, "iterations": self.iterations,
            "sign_definite": self.sign_definite, "min_over_max": self.min_over_max,
            "diagnostics": dict(self.diagnostics),
        }


def nehari_factor(A: float, B: float, p: float) -> float:
    """``t0`` with ``J(t0 u) = 0``: ``(A/B)^(1/(p-1))``."""
    if not A > 0:
        raise ParameterError("quadratic part must be positive (non-coercive direction)")
    if not B > 0:
        raise ParameterError("nonlinear aggregate vanishes")
    return (A / B) ** (1.0 / (p - 1.0))


def nehari_scale(u: SpectralField, m: float, p: float, grid: Grid) -> float:
    A = float(np.sum(u.coeffs ** 2 * kinetic_weights(u.spectrum, m)))
    B = grid.integrate(np.abs(synthesize_array(u.coeffs, grid)) ** (p + 1.0))
    return nehari_factor(A, B, p)


class _Problem:
    """Quadratic weights ``q_k`` plus the power nonlinearity on a fixed grid."""

    def __init__(self, grid: Grid, weights: np.ndarray, p: float):
        self.grid = grid
        self.q = weights
        self.p = p

    def parts(self, c):
        vals = synthesize_array(c, self.grid)
        A = float(np.sum(c * c * self.q))
        B = self.grid.integrate(np.abs(vals) ** (self.p + 1.0))
        return A, B, vals

    def force(self, vals):
        return analyze_array(signed_power(vals, self.p), self.grid)

    def level(self, A, B):
        # max_t of 1/2 t^2 A - t^(p+1) B/(p+1)
        p = self.p
        return (0.5 - 1.0 / (p + 1.0)) * A ** ((p + 1.0) / (p - 1.0)) * B ** (-2.0 / (p - 1.0))


def _initial_guess(spectrum: Spectrum, config: SolverConfig) -> np.ndarray:
    c = spectrum.unit((1,) * spectrum.domain.n)
    if config.initial == "random":
        rng = np.random.default_rng(config.seed)
        decay = 1.0 / (1.0 + spectrum.eigenvalues / spectrum.lambda1) ** 2
        c = c + config.perturbation * decay * rng.standard_normal(spectrum.size)
    return c


def nehari_descent(problem: _Problem, c0: np.ndarray, config: SolverConfig):
    """Preconditioned steepest descent of the action restricted to the Nehari manifold.

    Returns ``(c, energy, gradient, residual_prec, iterations, trace, converged)``.
    """
    q = problem.q
    A, B, vals = problem.parts(c0)
    if not np.any(c0):
        raise ParameterError("initial guess must be nonzero")
    c = nehari_factor(A, B, problem.p) * c0
    A, B, vals = problem.parts(c)
    energy = problem.level(A, B)
    trace = [energy]
    step = config.step0
    converged = False
    it = 0
    g = d = None
    for it in range(1, config.max_iter + 1):
        f = problem.force(vals)
        g = q * c - f
        d = g / q
        cn = np.linalg.norm(c)
        res_raw = np.linalg.norm(g) / cn
        res_pre = np.linalg.norm(d) / cn
        if not np.isfinite(res_raw):
            raise NumericalBlowupError(f"non-finite gradient at iteration {it}")
        if res_raw <= config.tol and res_pre <= config.tol:
            converged = True
            break
        slope = float(g @ d)
        s = step
        while True:
            trial = c - s * d
            At, Bt, _ = problem.parts(trial)
            if At > 0 and Bt > 0:
                t0 = nehari_factor(At, Bt, problem.p)
                ct = t0 * trial
                At, Bt, vt = problem.parts(ct)
                et = problem.level(At, Bt)
                # energy changes below ~res^2 are invisible in floating point
                if et <= energy - config.armijo * s * slope + ROUNDOFF * abs(energy):
                    break
            s *= config.shrink
            if s < config.min_step:
                break
        if s < config.min_step:
            # no decrease representable in floating point; stop where we are
            log.debug("line search stalled at iteration %d (res %.3e)", it, res_raw)
            break
        if et > energy + ROUNDOFF * abs(energy):
            raise AssertionError("accepted step increased the energy")
        c, vals, A, B, energy = ct, vt, At, Bt, et
        trace.append(energy)
        step = min(config.max_step, s * 2.0 if s >= step else s)
    else:
        f = problem.force(vals)
        g = q * c - f
        d = g / q
    return c, energy, g, d, it, trace, converged


def _finish(spectrum, grid, c, energy, g, d, it, trace, converged, m, p, config) -> SolveReport:
    vals = synthesize_array(c, grid)
    if vals.sum() < 0:
        c, vals = -c, -vals
    u = SpectralField(spectrum, c)
    cn = np.linalg.norm(c)
    q = kinetic_weights(spectrum, m)
    A = float(np.sum(c * c * q))
    B = grid.integrate(np.abs(vals) ** (p + 1.0))
    vmax = np.abs(vals).max()
    report = SolveReport(
        solution=u, m=m, p=p, energy=energy, nehari_value=A - B, quadratic_part=A,
        residual=float(np.linalg.norm(g) / cn), gradient_norm=float(np.linalg.norm(d) / cn),
        converged=converged, iterations=it, trace=trace,
        min_over_max=float(vals.min() / vmax),
    )
    report.sign_definite = report.min_over_max >= -1e-6
    if config.diagnostics:
        report.diagnostics = {
            "nehari_identity": nehari_identity_residual(u, m, p, grid),
            "pohozaev": pohozaev_residual(u, m, p, grid),
            "trace_ratio": trace_coercivity_check(u, m).ratio,
        }
    return report


def solve_least_energy(domain: Domain, m: float, p: float, config: SolverConfig | None = None,
                       grid: Grid | None = None) -> SolveReport:
    """Least-energy solution of ``(sqrt(-Delta+m^2) - m) u = |u|^(p-1) u`` at truncation N."""
    config = config or SolverConfig()
    if not m > 0:
        raise ParameterError(f"mass must be positive, got {m}")
    if p <= 1:
        raise ParameterError(f"p must exceed 1, got {p}")
    n = domain.n
    if n > 2 and p >= (n + 2) / (n - 2):
        log.info("p=%g is H^1-(super)critical for n=%d; truncated problem only", p, n)
    if grid is None:
        grid = make_grid(enumerate_modes(domain, config.N))
    spectrum = grid.spectrum
    problem = _Problem(grid, kinetic_weights(spectrum, m), p)
    out = nehari_descent(problem, _initial_guess(spectrum, config), config)
    return _finish(spectrum, grid, *out, m=m, p=p, config=config)


# ---------------------------------------------------------------------------
# critical-case level bound


@dataclass(frozen=True)
class LevelRow:
    lambda_scale: float
    level: float
    threshold: float
    flag: bool


def cutoff(r: np.ndarray, radius: float) -> np.ndarray:
    """Smooth radial cut-off: 1 for ``r <= radius/2``, 0 for ``r >= radius``."""
    return 1.0 - smoothstep5((r - 0.5 * radius) / (0.5 * radius))


def cutoff_radius(domain: Domain) -> float:
    return 0.45 * min(domain.side_lengths)


def mountain_pass_level_bound(domain: Domain, m: float, lambda_scales: Sequence[float],
                              N: int = 12, grid: Grid | None = None) -> list[LevelRow]:
    """``max_t I_m(t Psi)`` for the projected, cut-off bubble ``Psi`` at each scale."""
    n = domain.n
    if n < 2:
        raise ParameterError("level bound needs n >= 2")
    if m < 0:
        raise ParameterError("mass must be >= 0")
    p = (n + 1.0) / (n - 1.0)
    if grid is None:
        grid = make_grid(enumerate_modes(domain, N))
    R = cutoff_radius(domain)
    X = grid.mesh()
    centre = domain.center
    r = np.sqrt(sum((x - c0) ** 2 for x, c0 in zip(X, centre)))
    phi = cutoff(r, R)
    threshold = bubbles.sharp_constant(n) ** (-2 * n) / (2 * n)
    q = kinetic_weights(grid.spectrum, m)
    rows = []
    for lam in lambda_scales:
        if not 0 < lam < 0.5 * R:
            raise GeometryError(f"lambda_scale {lam} must lie in (0, {0.5 * R:.4g})")
        params = bubbles.BubbleParams(n, lam, tuple(centre))
        w = bubbles.bubble_w(np.stack(X, axis=-1), params)
        c = analyze_array(phi * w, grid)
        alpha = float(np.sum(c * c * q))
        beta = grid.integrate(np.abs(synthesize_array(c, grid)) ** (p + 1.0))
        level = alpha ** n * beta ** (-(n - 1)) / (2 * n)
        rows.append(LevelRow(float(lam), float(level), float(threshold), bool(level < threshold)))
    return rows


# ---------------------------------------------------------------------------
# nonexistence probe


@dataclass(frozen=True)
class ProbeRow:
    N: int
    linf: float
    energy: float
    pohozaev: float
    residual: float
    converged: bool


def nonexistence_probe(domain: Domain, m: float, p: float, N_list: Sequence[int],
                       config: SolverConfig | None = None) -> list[ProbeRow]:
    """Least-energy solves of the truncated problem across truncations, with Pohozaev defects."""
    base = config or SolverConfig()
    rows = []
    for N in N_list:
        cfg = SolverConfig(**{**base.__dict__, "N": int(N), "diagnostics": False})
        grid = make_grid(enumerate_modes(domain, N))
        rep = solve_least_energy(domain, m, p, cfg, grid=grid)
        vals = synthesize_array(rep.solution.coeffs, grid)
        rows.append(ProbeRow(int(N), float(np.abs(vals).max()), rep.energy,
                             pohozaev_residual(rep.solution, m, p, grid), rep.residual,
                             rep.converged))
    return rows


def decay_factors(rows: Sequence[ProbeRow]) -> list[float]:
    """Ratio of successive Pohozaev residuals, normalised to a doubling of N."""
    out = []
    for a, b in zip(rows, rows[1:]):
        out.append((a.pohozaev / b.pohozaev) ** (np.log(2.0) / np.log(b.N / a.N)))
    return out
