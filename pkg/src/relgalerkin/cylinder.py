"""Closed-form cylinder extension and the integral identities built on it.

A field ``u = sum c_k phi_k`` extends to the half-cylinder ``Omega x (0, inf)`` as
``U(x, t) = sum c_k exp(-mu_k t) phi_k(x)`` with ``mu_k = sqrt(lambda_k + m^2)``.  Every
cylinder integral used below reduces to a weighted sum of ``c_k^2`` or, for the lateral
boundary term, a double sum with the kernel ``1 / (mu_k + mu_l)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .eigenbasis import Grid
from .errors import ParameterError
from .field import SpectralField, power_integral


@dataclass(frozen=True, eq=False)
class CylinderExtension:
    u: SpectralField
    m: float
    mu: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.m < 0:
            raise ParameterError(f"mass must be >= 0, got {self.m}")
        mu = np.sqrt(self.u.spectrum.eigenvalues + self.m ** 2)
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)

    def trace(self) -> SpectralField:
        return self.u

    def at(self, t: float) -> SpectralField:
        return SpectralField(self.u.spectrum, self.u.coeffs * np.exp(-self.mu * t))

    def normal_derivative(self) -> SpectralField:
        """``-d/dt U(., 0)``, i.e. ``sqrt(-Delta + m^2) u``."""
        return SpectralField(self.u.spectrum, self.mu * self.u.coeffs)

    def equation_defect(self) -> float:
        """Largest per-mode value of ``lambda_k - mu_k^2 + m^2`` (zero analytically)."""
        lam = self.u.spectrum.eigenvalues
        return float(np.max(np.abs(lam - self.mu ** 2 + self.m ** 2)))


@dataclass(frozen=True)
class CylinderIntegrals:
    E_x: float  # int_C |grad_x U|^2
    E_t: float  # int_C |d_t U|^2
    E_0: float  # int_C U^2
    T_0: float  # int_Omega U(x, 0)^2


def cylinder_integrals(ext: CylinderExtension) -> CylinderIntegrals:
    c2 = ext.u.coeffs ** 2
    lam = ext.u.spectrum.eigenvalues
    mu = ext.mu
    return CylinderIntegrals(
        E_x=float(np.sum(c2 * lam / (2.0 * mu))),
        E_t=float(np.sum(c2 * mu / 2.0)),
        E_0=float(np.sum(c2 / (2.0 * mu))),
        T_0=float(np.sum(c2)),
    )


def _face_derivative_factors(grid: Grid, axis: int, side: int) -> np.ndarray:
    """Outward normal derivative of the 1-D factor ``sqrt(2/L) sin(k pi x / L)`` on a face."""
    L = grid.domain.side_lengths[axis]
    kk = grid.spectrum.axis_wavenumbers(axis)
    amp = np.sqrt(2.0 / L) * kk
    if side == 0:
        return -amp
    return amp * np.cos(kk * L)


def lateral_boundary_term(
    ext: CylinderExtension,
    grid: Grid,
    origin: np.ndarray | None = None,
    chunk: int = 512,
) -> float:
    """``int_{lateral} (nu . (x - origin)) (dU/dnu)^2 dS`` in closed form in ``t``.

    The face integrals of products of normal derivatives are taken with Gauss
    quadrature on each face (tensor nodes of the remaining axes).
    """
    dom = grid.domain
    origin = dom.center if origin is None else np.asarray(origin, dtype=float)
    sides = np.asarray(dom.side_lengths)
    if np.any(origin <= 0) or np.any(origin >= sides):
        warnings.warn("origin outside the box: nu.x has indefinite sign, term may be negative",
                      RuntimeWarning, stacklevel=2)
    sp = ext.u.spectrum
    c = ext.u.coeffs
    if not np.any(c):
        return 0.0
    modes = sp.modes - 1
    mu = ext.mu
    # per-face Gram matrices of the tangential factors
    grams = [S.T @ (w[:, None] * S) for S, w in zip(grid.sin_mats, grid.weights)]
    total = 0.0
    for face in dom.faces:
        j = face.axis
        lever = (sides[j] - origin[j]) if face.side else origin[j]
        d = _face_derivative_factors(grid, j, face.side)
        a = c * d[modes[:, j]]
        acc = 0.0
        for start in range(0, sp.size, chunk):
            rows = slice(start, start + chunk)
            H = np.ones((modes[rows].shape[0], sp.size))
            for i in range(dom.n):
                if i != j:
                    H *= grams[i][modes[rows, i][:, None], modes[None, :, i]]
            H /= mu[rows, None] + mu[None, :]
            acc += float(a[rows] @ H @ a)
        total += lever * acc
    return total


def lateral_boundary_term_exact(ext: CylinderExtension, origin: np.ndarray | None = None) -> float:
    """Same term using exact tangential orthogonality (pairs differ only along the normal axis)."""
    sp = ext.u.spectrum
    dom = sp.domain
    origin = dom.center if origin is None else np.asarray(origin, dtype=float)
    sides = np.asarray(dom.side_lengths)
    tensor_c = ext.u.coeffs.reshape(sp.shape)
    tensor_mu = ext.mu.reshape(sp.shape)
    total = 0.0
    for j, L in enumerate(sides):
        kk = sp.axis_wavenumbers(j)
        amp = np.sqrt(2.0 / L) * kk
        for side, lever in ((0, origin[j]), (1, L - origin[j])):
            d = -amp if side == 0 else amp * np.cos(kk * L)
            a = np.moveaxis(tensor_c, j, -1) * d
            mu = np.moveaxis(tensor_mu, j, -1)
            kern = 1.0 / (mu[..., :, None] + mu[..., None, :])
            total += lever * float(np.einsum("...k,...kl,...l->...", a, kern, a).sum())
    return total


def nehari_identity_residual(u: SpectralField, m: float, p: float, grid: Grid) -> float:
    """Normalised defect of ``int (m U^2 + |U|^(p+1)) = m^2 int_C U^2 + int_C |grad U|^2``."""
    ext = CylinderExtension(u, m)
    I = cylinder_integrals(ext)
    B = power_integral(u, p + 1.0, grid)
    terms = np.array([m * I.T_0, B, m * m * I.E_0, I.E_x + I.E_t])
    scale = np.abs(terms).max()
    if scale == 0:
        return 0.0
    return float(abs(terms[0] + terms[1] - terms[2] - terms[3]) / scale)


@dataclass(frozen=True)
class PohozaevTerms:
    gradient_x: float
    gradient_t: float
    mass_bulk: float
    nonlinear: float
    mass_trace: float
    lateral: float

    def as_array(self) -> np.ndarray:
        return np.array([self.gradient_x, self.gradient_t, self.mass_bulk,
                         self.nonlinear, self.mass_trace, self.lateral])

    @property
    def residual(self) -> float:
        t = self.as_array()
        scale = np.abs(t).max()
        return 0.0 if scale == 0 else float(abs(t.sum()) / scale)


def pohozaev_terms(u: SpectralField, m: float, p: float, grid: Grid,
                   origin: np.ndarray | None = None) -> PohozaevTerms:
    """The six signed terms of the anisotropic (x-only) Pohozaev identity.

    The nonlinear term uses ``|U|^(p+1)`` so sign-changing fields are handled.
    """
    n = u.spectrum.domain.n
    ext = CylinderExtension(u, m)
    I = cylinder_integrals(ext)
    B = power_integral(u, p + 1.0, grid)
    return PohozaevTerms(
        gradient_x=0.5 * (n - 2) * I.E_x,
        gradient_t=0.5 * n * I.E_t,
        mass_bulk=0.5 * n * m * m * I.E_0,
        nonlinear=-n / (p + 1.0) * B,
        mass_trace=-0.5 * n * m * I.T_0,
        lateral=0.5 * lateral_boundary_term(ext, grid, origin),
    )


def pohozaev_residual(u: SpectralField, m: float, p: float, grid: Grid,
                      origin: np.ndarray | None = None) -> float:
    return pohozaev_terms(u, m, p, grid, origin).residual


@dataclass(frozen=True)
class TraceCheck:
    lhs: float   # m T_0
    rhs: float   # m^2 E_0 + E_t
    ratio: float  # (E_x + E_t + m^2 E_0 - m T_0) / (E_x + E_t)

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + 1e-14)


def trace_coercivity_check(u: SpectralField, m: float) -> TraceCheck:
    if not np.any(u.coeffs):
        raise ParameterError("trace check needs a nonzero field")
    I = cylinder_integrals(CylinderExtension(u, m))
    lhs = m * I.T_0
    rhs = m * m * I.E_0 + I.E_t
    grad = I.E_x + I.E_t
    return TraceCheck(lhs, rhs, (grad + m * m * I.E_0 - lhs) / grad)


def coercivity_floor(spectrum, m: float) -> float:
    """Per-mode minimum of ``(mu_k - m) / mu_k``; the coercivity ratio never drops below it."""
    mu = np.sqrt(spectrum.eigenvalues + m * m)
    return float(np.min((spectrum.eigenvalues / (mu + m)) / mu))
