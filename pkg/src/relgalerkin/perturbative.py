"""Large-mass solutions by contraction around a non-degenerate Lane-Emden solution.

After the rescaling ``u -> (2m)^(1/(p-1)) u`` the equation reads ``2m P_m u = |u|^(p-1) u``.
Writing ``u_m = u_inf + w`` with ``-Delta u_inf = |u_inf|^(p-1) u_inf`` gives the fixed-point
problem ``w = A_m^{-1} (2m P_m)^{-1} [Q(w) + D_m(u_inf)]`` where

    D_m = (-Delta) - 2m P_m
    A_m = I - (2m P_m)^{-1} p |u_inf|^(p-1)
    Q(w) = |u_inf + w|^(p-1)(u_inf + w) - |u_inf|^(p-1) u_inf - p |u_inf|^(p-1) w
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator, eigsh, gmres

from .eigenbasis import Domain, Grid, analyze_array, enumerate_modes, make_grid, synthesize_array
from .errors import DegeneracyError, DivergenceError, InvertibilityError, ParameterError
from .field import SpectralField, signed_power
from .spectral_calculus import log_slope, two_m_Pm
from .variational import SolverConfig, _Problem, nehari_descent

log = logging.getLogger(__name__)

DENSE_LIMIT = 5000


# ---------------------------------------------------------------------------
# multiplication operators in coefficient space


def multiplication_matrix(g: np.ndarray, grid: Grid) -> np.ndarray:
    """Galerkin matrix ``M_kl = int g phi_k phi_l`` by quadrature, contracted axis by axis."""
    n = grid.domain.n
    N = grid.spectrum.N
    T = grid.weight_tensor * g
    # contract each grid axis with S[x, k] S[x, l]; new (k, l) pairs are appended at the end
    for j in range(n):
        S = grid.sin_mats[j]
        P = S[:, :, None] * S[:, None, :]
        T = np.tensordot(T, P, axes=([0], [0]))
    # axes are now (k1, l1, k2, l2, ...)
    order = [2 * j for j in range(n)] + [2 * j + 1 for j in range(n)]
    K = N ** n
    return np.ascontiguousarray(T.transpose(order)).reshape(K, K)


def apply_multiplication(g: np.ndarray, c: np.ndarray, grid: Grid) -> np.ndarray:
    """Matrix-free product with the same Galerkin matrix."""
    return analyze_array(g * synthesize_array(c, grid), grid)


# ---------------------------------------------------------------------------
# limit problem


@dataclass
class LimitSolution:
    u: SpectralField
    p: float
    grid: Grid = field(repr=False)
    sigma_min: float = float("nan")
    residual: float = float("nan")
    eigenvalues: np.ndarray = field(default=None, repr=False)

    @property
    def potential(self) -> np.ndarray:
        """Grid values of ``p |u_inf|^(p-1)``."""
        vals = synthesize_array(self.u.coeffs, self.grid)
        return self.p * np.abs(vals) ** (self.p - 1.0)


def limit_residual(c: np.ndarray, grid: Grid, p: float) -> float:
    lam = grid.spectrum.eigenvalues
    f = analyze_array(signed_power(synthesize_array(c, grid), p), grid)
    return float(np.linalg.norm(lam * c - f) / np.linalg.norm(c))


def linearization_spectrum(limit_u: np.ndarray, grid: Grid, p: float, k: int = 16) -> np.ndarray:
    """Leading eigenvalues of the symmetrised compact part ``L^(-1/2) M L^(-1/2)``.

    ``M`` is the Galerkin matrix of ``p |u_inf|^(p-1)`` and ``L = diag(lambda_k)``.  The
    linearisation ``I - (-Delta)^{-1} p |u_inf|^(p-1)`` is similar to ``I`` minus this matrix.
    """
    lam = grid.spectrum.eigenvalues
    g = p * np.abs(synthesize_array(limit_u, grid)) ** (p - 1.0)
    s = 1.0 / np.sqrt(lam)
    K = lam.size
    if K <= DENSE_LIMIT:
        Ms = multiplication_matrix(g, grid) * s[:, None] * s[None, :]
        return np.sort(np.linalg.eigvalsh(0.5 * (Ms + Ms.T)))[::-1]
    op = LinearOperator((K, K), matvec=lambda v: s * apply_multiplication(g, s * np.ravel(v), grid),
                        dtype=float)
    while True:
        vals = eigsh(op, k=min(k, K - 2), which="LA", return_eigenvectors=False, tol=1e-12)
        if vals.min() < 1.0 or k >= K - 2:
            return np.sort(vals)[::-1]
        k *= 2


def sigma_from_spectrum(kappa: np.ndarray) -> float:
    """Smallest ``|1 - kappa|`` over the linearisation spectrum.

    ``kappa`` may hold only the leading eigenvalues.  The compact part is positive
    semidefinite, so the unresolved ones lie in ``[0, min kappa]``: once ``min kappa < 1``
    they are farther from 1 than ``min kappa`` itself and the resolved minimum is exact.
    Otherwise nothing can be certified and 0 is returned.
    """
    kappa = np.asarray(kappa, dtype=float)
    if kappa.min() >= 1.0:
        return 0.0
    return float(np.abs(1.0 - kappa).min())


def solve_limit(p: float, domain: Domain, config: SolverConfig | None = None,
                grid: Grid | None = None, sigma_threshold: float = 1e-6) -> LimitSolution:
    """Positive Lane-Emden solution at truncation N with its non-degeneracy margin."""
    config = config or SolverConfig(tol=1e-12, diagnostics=False)
    n = domain.n
    if p <= 1 or (n > 2 and p >= (n + 2) / (n - 2)):
        raise ParameterError(f"p={p} outside the subcritical range of the limit problem")
    if grid is None:
        grid = make_grid(enumerate_modes(domain, config.N))
    sp = grid.spectrum
    problem = _Problem(grid, sp.eigenvalues, p)
    c0 = sp.unit((1,) * n)
    c, *_ = nehari_descent(problem, c0, config)
    c = _newton_polish(c, grid, p)
    if synthesize_array(c, grid).sum() < 0:
        c = -c
    kappa = linearization_spectrum(c, grid, p)
    sigma = sigma_from_spectrum(kappa)
    out = LimitSolution(SpectralField(sp, c), p, grid, sigma, limit_residual(c, grid, p), kappa)
    if sigma < sigma_threshold:
        raise DegeneracyError(f"limit solution degenerate: sigma_min={sigma:.3e}")
    return out


def _newton_polish(c: np.ndarray, grid: Grid, p: float, steps: int = 3) -> np.ndarray:
    """A few Newton steps on ``lambda c - P(|u|^(p-1) u) = 0`` (dense Jacobian when small)."""
    lam = grid.spectrum.eigenvalues
    K = lam.size
    for _ in range(steps):
        vals = synthesize_array(c, grid)
        r = lam * c - analyze_array(signed_power(vals, p), grid)
        if np.linalg.norm(r) <= 1e-14 * np.linalg.norm(lam * c):
            break
        g = p * np.abs(vals) ** (p - 1.0)
        if K <= DENSE_LIMIT:
            J = np.diag(lam) - multiplication_matrix(g, grid)
            c = c - np.linalg.solve(J, r)
        else:
            op = LinearOperator((K, K), matvec=lambda v: lam * v - apply_multiplication(g, v, grid),
                                dtype=float)
            dx, info = gmres(op, r, rtol=1e-13, atol=0.0, restart=200, maxiter=50)
            c = c - dx
    return c


# ---------------------------------------------------------------------------
# operators of the fixed-point map


def Dm_multiplier(lam, m: float) -> np.ndarray:
    """``lambda - 2m(sqrt(lambda+m^2) - m)`` simplified to ``lambda^2 / (sqrt(lambda+m^2)+m)^2``."""
    lam = np.asarray(lam, dtype=float)
    return lam ** 2 / (np.sqrt(lam + m * m) + m) ** 2


def op_Dm(u: SpectralField, m: float) -> SpectralField:
    if not m > 0:
        raise ParameterError("mass must be positive")
    return SpectralField(u.spectrum, Dm_multiplier(u.spectrum.eigenvalues, m) * u.coeffs)


def op_Q(w: SpectralField, u_inf: SpectralField, p: float, grid: Grid) -> SpectralField:
    if p <= 1:
        raise ParameterError("p must exceed 1")
    W = synthesize_array(w.coeffs, grid)
    U = synthesize_array(u_inf.coeffs, grid)
    q = signed_power(U + W, p) - signed_power(U, p) - p * np.abs(U) ** (p - 1.0) * W
    return SpectralField(w.spectrum, analyze_array(q, grid))


class AmOperator:
    """Dense ``A_m = I - (2m P_m)^{-1} p |u_inf|^(p-1)`` with a cached LU factorisation."""

    def __init__(self, limit: LimitSolution, m: float, mult: np.ndarray | None = None):
        if not m > 0:
            raise ParameterError("mass must be positive")
        self.limit = limit
        self.m = m
        sp = limit.u.spectrum
        if mult is None:
            mult = multiplication_matrix(limit.potential, limit.grid)
        self.inv_symbol = 1.0 / two_m_Pm(sp.eigenvalues, m)
        self.matrix = np.eye(sp.size) - self.inv_symbol[:, None] * mult
        self.lu = sla.lu_factor(self.matrix, check_finite=True)
        d = np.abs(np.diag(self.lu[0]))
        if d.min() <= 1e-13 * d.max():
            raise InvertibilityError(f"A_m numerically singular at m={m} (pivot ratio {d.min() / d.max():.2e})")

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def solve(self, phi: np.ndarray) -> np.ndarray:
        x = sla.lu_solve(self.lu, phi)
        res = np.linalg.norm(self.matrix @ x - phi)
        if res > 1e-10 * max(np.linalg.norm(phi), np.finfo(float).tiny):
            raise InvertibilityError(f"back-substitution residual {res:.2e} too large")
        return x

    def solve_matrix_free(self, phi: np.ndarray) -> np.ndarray:
        """Independent path: GMRES with collocation matvecs, no assembled matrix."""
        lim = self.limit
        g = lim.potential
        K = phi.size
        op = LinearOperator((K, K), dtype=float,
                            matvec=lambda v: v - self.inv_symbol * apply_multiplication(g, np.ravel(v), lim.grid))
        x, info = gmres(op, phi, rtol=1e-13, atol=0.0, restart=min(K, 200), maxiter=100)
        if info != 0:
            raise InvertibilityError(f"GMRES did not converge (info={info})")
        return x

    def inverse_norm(self, iters: int = 200, seed: int = 0) -> float:
        """Power iteration for ``||A_m^{-1}||_2`` on ``A^{-T} A^{-1}``."""
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(self.matrix.shape[0])
        v /= np.linalg.norm(v)
        est = 0.0
        for _ in range(iters):
            y = sla.lu_solve(self.lu, sla.lu_solve(self.lu, v), trans=1)
            new = np.sqrt(np.linalg.norm(y))
            v = y / np.linalg.norm(y)
            if abs(new - est) <= 1e-10 * new:
                est = new
                break
            est = new
        return float(est)


def apply_Am_inverse(phi: SpectralField, limit: LimitSolution, m: float) -> SpectralField:
    return SpectralField(phi.spectrum, AmOperator(limit, m).solve(phi.coeffs))


# ---------------------------------------------------------------------------
# fixed point


@dataclass
class FixedPointConfig:
    tol: float = 1e-12
    max_iter: int = 100
    delta_fraction: float = 0.25  # ball radius relative to ||u_inf||_{L^q}
    m0: float = 1.0


@dataclass
class ContractionState:
    w: SpectralField
    iterations: int
    contraction: list[float]
    delta: float
    w_Lq: float
    q: float
    converged: bool

    @property
    def factor(self) -> float:
        return self.contraction[0] if self.contraction else 0.0


@dataclass
class FixedPointResult:
    m: float
    p: float
    u_m: SpectralField          # solves 2m P_m u = |u|^(p-1) u
    u_original: SpectralField   # (2m)^(-1/(p-1)) u_m, solves P_m u = |u|^(p-1) u
    state: ContractionState
    residual: float
    in_theorem_range: bool


def transformed_residual(u: SpectralField, m: float, p: float, grid: Grid) -> float:
    lam = u.spectrum.eigenvalues
    norm = np.linalg.norm(u.coeffs)
    if norm == 0:
        return 0.0
    f = analyze_array(signed_power(synthesize_array(u.coeffs, grid), p), grid)
    return float(np.linalg.norm(two_m_Pm(lam, m) * u.coeffs - f) / norm)


def fixed_point_solve(m: float, p: float, limit: LimitSolution,
                      config: FixedPointConfig | None = None,
                      am: AmOperator | None = None) -> FixedPointResult:
    config = config or FixedPointConfig()
    if m < config.m0:
        raise ParameterError(f"m={m} below configured m0={config.m0}")
    grid = limit.grid
    sp = limit.u.spectrum
    n = sp.domain.n
    u_inf = limit.u
    am = am or AmOperator(limit, m)
    inv = am.inv_symbol
    rhs0 = op_Dm(u_inf, m).coeffs
    scale = np.linalg.norm(u_inf.coeffs)
    w = np.zeros(sp.size)
    prev_step = None
    ratios: list[float] = []
    bad = 0
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        Qw = op_Q(SpectralField(sp, w), u_inf, p, grid).coeffs if np.any(w) else 0.0
        w_new = am.solve(inv * (Qw + rhs0))
        step = np.linalg.norm(w_new - w)
        if prev_step is not None and prev_step > 0:
            ratios.append(step / prev_step)
            bad = bad + 1 if ratios[-1] >= 1.0 else 0
            if bad >= 3:
                raise DivergenceError(f"no contraction at m={m}: m is below the empirical m0")
        w = w_new
        prev_step = step
        if step <= config.tol * scale:
            converged = True
            break
    q = n * p
    W = synthesize_array(w, grid)
    U = synthesize_array(u_inf.coeffs, grid)
    w_Lq = grid.integrate(np.abs(W) ** q) ** (1.0 / q)
    delta = config.delta_fraction * grid.integrate(np.abs(U) ** q) ** (1.0 / q)
    state = ContractionState(SpectralField(sp, w), it, ratios, delta, w_Lq, q,
                             converged and (not ratios or ratios[-1] < 1.0) and w_Lq <= delta)
    u_m = SpectralField(sp, u_inf.coeffs + w)
    lo, hi = (n + 1) / (n - 1), ((n + 2) / (n - 2) if n > 2 else np.inf)
    return FixedPointResult(
        m=m, p=p, u_m=u_m, u_original=(2 * m) ** (-1.0 / (p - 1.0)) * u_m, state=state,
        residual=transformed_residual(u_m, m, p, grid), in_theorem_range=bool(lo < p < hi))


# ---------------------------------------------------------------------------
# rate study


def w1n_norm(c: np.ndarray, grid: Grid, order: float | None = None) -> float:
    """Quadrature ``W^{1,q}`` norm ``(int |v|^q + |grad v|^q)^(1/q)``, default ``q = n``."""
    n = grid.domain.n
    q = float(n if order is None else order)
    v = synthesize_array(c, grid)
    grad2 = sum(synthesize_array(c, grid, derivative=j) ** 2 for j in range(n))
    return grid.integrate(np.abs(v) ** q + grad2 ** (q / 2)) ** (1.0 / q)


@dataclass(frozen=True)
class RateRow:
    m: float
    error: float
    contraction_factor: float
    residual: float
    iterations: int


@dataclass
class RateStudy:
    p: float
    n: int
    rows: list[RateRow]
    excluded: list[tuple[float, str]]
    slope: float
    expected_order: int  # 2 if p > 2 else 1

    def summary(self) -> dict:
        return {"p": self.p, "n": self.n, "slope": self.slope,
                "expected_order": self.expected_order,
                "m": [r.m for r in self.rows], "error": [r.error for r in self.rows],
                "contraction_factor": [r.contraction_factor for r in self.rows],
                "excluded": [list(e) for e in self.excluded]}


def rate_study(p: float, m_list: Sequence[float], limit: LimitSolution,
               config: FixedPointConfig | None = None) -> RateStudy:
    m_list = [float(m) for m in m_list]
    if any(b <= a for a, b in zip(m_list, m_list[1:])):
        raise ParameterError("m_list must be strictly ascending")
    mult = multiplication_matrix(limit.potential, limit.grid)
    rows, excluded = [], []
    for m in m_list:
        try:
            am = AmOperator(limit, m, mult)
            res = fixed_point_solve(m, p, limit, config, am=am)
        except (DivergenceError, InvertibilityError) as exc:
            excluded.append((m, str(exc)))
            continue
        if not res.state.converged:
            excluded.append((m, "not converged"))
            continue
        err = w1n_norm(res.u_m.coeffs - limit.u.coeffs, limit.grid)
        rows.append(RateRow(m, err, res.state.factor, res.residual, res.state.iterations))
        log.info("m=%g error=%.4e factor=%.3e", m, err, res.state.factor)
    slope = log_slope([r.m for r in rows], [r.error for r in rows]) if len(rows) >= 2 else float("nan")
    return RateStudy(p, limit.grid.domain.n, rows, excluded, slope, 2 if p > 2 else 1)
