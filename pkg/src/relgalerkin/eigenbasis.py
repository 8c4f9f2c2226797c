"""Dirichlet-Laplacian eigensystem on boxes and the coefficient <-> grid transforms.

On the box ``(0, L_1) x ... x (0, L_n)`` the normalised Dirichlet eigenfunctions are
tensor products of ``sqrt(2/L_j) sin(k_j pi x_j / L_j)`` with eigenvalues
``sum_j (k_j pi / L_j)**2``.  Coefficient vectors are ordered lexicographically in
the multi-index ``k`` (last axis fastest), which is also C order of the
``(N,) * n`` coefficient tensor.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import CapacityError, DomainMismatchError, ParameterError, ResolutionError

MAX_DIM = 4
MODE_BUDGET = 250_000
GRAM_TOL = 1e-12


@dataclass(frozen=True)
class Face:
    """One axis-aligned boundary face ``x[axis] == value``."""

    axis: int
    side: int  # 0 -> x_axis = 0, 1 -> x_axis = L_axis
    value: float
    normal: tuple[float, ...]


@dataclass(frozen=True)
class Domain:
    side_lengths: tuple[float, ...]

    def __post_init__(self):
        sides = tuple(float(s) for s in self.side_lengths)
        object.__setattr__(self, "side_lengths", sides)
        if not 1 <= len(sides) <= MAX_DIM:
            raise ParameterError(f"dimension must be in 1..{MAX_DIM}, got {len(sides)}")
        if any(not np.isfinite(s) or s <= 0 for s in sides):
            raise ParameterError(f"side lengths must be positive, got {sides}")

    @classmethod
    def cube(cls, n: int, side: float = np.pi) -> "Domain":
        return cls((side,) * n)

    @property
    def n(self) -> int:
        return len(self.side_lengths)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * np.asarray(self.side_lengths)

    @property
    def volume(self) -> float:
        return float(np.prod(self.side_lengths))

    @cached_property
    def faces(self) -> tuple[Face, ...]:
        out = []
        for j, L in enumerate(self.side_lengths):
            for side in (0, 1):
                nu = [0.0] * self.n
                nu[j] = 1.0 if side else -1.0
                out.append(Face(j, side, L if side else 0.0, tuple(nu)))
        return tuple(out)

    def first_eigenvalue(self) -> float:
        return float(sum((np.pi / L) ** 2 for L in self.side_lengths))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """All ``N**n`` Dirichlet modes with ``1 <= k_j <= N``."""

    domain: Domain
    N: int
    modes: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    normalization: float = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.domain.n

    @property
    def lambda1(self) -> float:
        return self.domain.first_eigenvalue()

    def axis_wavenumbers(self, axis: int) -> np.ndarray:
        return np.arange(1, self.N + 1) * np.pi / self.domain.side_lengths[axis]

    def index(self, k: Sequence[int]) -> int:
        """Position of multi-index ``k`` in the coefficient vector."""
        k = tuple(int(v) for v in k)
        if len(k) != self.domain.n or any(not 1 <= v <= self.N for v in k):
            raise IndexError(f"mode {k} not retained at N={self.N}")
        return int(np.ravel_multi_index(tuple(v - 1 for v in k), self.shape))

    def unit(self, k: Sequence[int]) -> np.ndarray:
        c = np.zeros(self.size)
        c[self.index(k)] = 1.0
        return c

    def is_compatible(self, other: "Spectrum") -> bool:
        return self is other or (self.domain == other.domain and self.N == other.N)


def enumerate_modes(domain: Domain, N: int, budget: int = MODE_BUDGET) -> Spectrum:
    """Enumerate the retained Dirichlet modes in lexicographic order of ``k``."""
    if int(N) != N or N < 1:
        raise ParameterError(f"truncation order must be a positive integer, got {N}")
    N = int(N)
    if N ** domain.n > budget:
        raise CapacityError(f"{N}**{domain.n} = {N ** domain.n} modes exceeds budget {budget}")
    modes = np.array(list(itertools.product(range(1, N + 1), repeat=domain.n)), dtype=int)
    scale = np.pi / np.asarray(domain.side_lengths)
    eig = ((modes * scale) ** 2).sum(axis=1)
    norm = float(np.prod([np.sqrt(2.0 / L) for L in domain.side_lengths]))
    modes.setflags(write=False)
    eig.setflags(write=False)
    return Spectrum(domain, N, modes, eig, norm)


def default_points(N: int) -> int:
    # 2N+1 Gauss points leave ~1e-4 Gram defects; 2N+12 reaches rounding level.
    return 2 * N + 12


@dataclass(frozen=True, eq=False)
class Grid:
    """Tensor Gauss-Legendre grid with per-axis sine (and cosine) transform matrices."""

    spectrum: Spectrum
    counts: tuple[int, ...]
    nodes: tuple[np.ndarray, ...] = field(repr=False)
    weights: tuple[np.ndarray, ...] = field(repr=False)
    sin_mats: tuple[np.ndarray, ...] = field(repr=False)
    cos_mats: tuple[np.ndarray, ...] = field(repr=False)
    gram_defect: float = 0.0

    @property
    def domain(self) -> Domain:
        return self.spectrum.domain

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts

    @cached_property
    def weight_tensor(self) -> np.ndarray:
        w = self.weights[0]
        for wj in self.weights[1:]:
            w = np.multiply.outer(w, wj)
        return w

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.nodes, indexing="ij")

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(self.weight_tensor * values))

    def refined(self, factor: int = 2) -> "Grid":
        return make_grid(self.spectrum, [factor * m for m in self.counts])


def _gauss(M: int, L: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(M)
    return 0.5 * L * (x + 1.0), 0.5 * L * w


def make_grid(spectrum: Spectrum, counts: Sequence[int] | int | None = None) -> Grid:
    """Build the collocation grid; refuses grids whose sine Gram matrix is not exact."""
    n = spectrum.domain.n
    if counts is None:
        counts = [default_points(spectrum.N)] * n
    elif np.isscalar(counts):
        counts = [int(counts)] * n
    counts = tuple(int(m) for m in counts)
    if len(counts) != n:
        raise ParameterError(f"need {n} point counts, got {len(counts)}")
    nodes, weights, sins, coss = [], [], [], []
    defect = 0.0
    for j, (M, L) in enumerate(zip(counts, spectrum.domain.side_lengths)):
        if M < 2 * spectrum.N + 1:
            raise ResolutionError(f"axis {j}: {M} points < 2N+1 = {2 * spectrum.N + 1}")
        x, w = _gauss(M, L)
        kk = spectrum.axis_wavenumbers(j)
        amp = np.sqrt(2.0 / L)
        S = amp * np.sin(np.outer(x, kk))
        C = amp * kk * np.cos(np.outer(x, kk))
        gram = S.T @ (w[:, None] * S)
        defect = max(defect, float(np.abs(gram - np.eye(spectrum.N)).max()))
        for arr in (x, w, S, C):
            arr.setflags(write=False)
        nodes.append(x)
        weights.append(w)
        sins.append(S)
        coss.append(C)
    if defect >= GRAM_TOL:
        raise ResolutionError(f"quadrature Gram defect {defect:.2e} >= {GRAM_TOL:g}; add points")
    return Grid(spectrum, counts, tuple(nodes), tuple(weights), tuple(sins), tuple(coss), defect)


def _apply_axes(tensor: np.ndarray, mats: Sequence[np.ndarray]) -> np.ndarray:
    """Contract axis ``j`` of ``tensor`` with ``mats[j]`` (shape out_j x in_j) for each j.

    Trailing axes beyond ``len(mats)`` are carried along as a batch.
    """
    out = tensor
    for j, A in enumerate(mats):
        out = np.moveaxis(np.tensordot(A, out, axes=([1], [j])), 0, j)
    return out


def _check_pair(spectrum: Spectrum, grid: Grid) -> None:
    if not spectrum.is_compatible(grid.spectrum):
        raise DomainMismatchError("coefficients and grid belong to different spectra")


def synthesize_array(coeffs: np.ndarray, grid: Grid, derivative: int | None = None) -> np.ndarray:
    """Grid values of ``sum_k c_k phi_k`` (or of its ``d/dx_axis`` derivative).

    ``coeffs`` may carry a trailing batch axis, shape ``(K,)`` or ``(K, B)``.
    """
    sp = grid.spectrum
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] != sp.size:
        raise DomainMismatchError(f"{coeffs.shape[0]} coefficients for {sp.size} modes")
    tensor = coeffs.reshape(sp.shape + coeffs.shape[1:])
    mats = list(grid.sin_mats)
    if derivative is not None:
        mats[derivative] = grid.cos_mats[derivative]
    return _apply_axes(tensor, mats)


def analyze_array(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Quadrature projection of grid values onto the retained modes."""
    values = np.asarray(values, dtype=float)
    n = grid.domain.n
    if values.shape[:n] != grid.shape:
        raise DomainMismatchError(f"grid values of shape {values.shape[:n]} for grid {grid.shape}")
    w = grid.weight_tensor.reshape(grid.shape + (1,) * (values.ndim - n))
    mats = [S.T for S in grid.sin_mats]
    out = _apply_axes(values * w, mats)
    return out.reshape((grid.spectrum.size,) + values.shape[n:])


def synthesize(field, grid: Grid) -> np.ndarray:
    """Evaluate a :class:`~relgalerkin.field.SpectralField` at the grid nodes."""
    _check_pair(field.spectrum, grid)
    return synthesize_array(field.coeffs, grid)


def analyze(values: np.ndarray, spectrum: Spectrum, grid: Grid):
    from .field import SpectralField

    _check_pair(spectrum, grid)
    return SpectralField(spectrum, analyze_array(values, grid))


def evaluate_modes(spectrum: Spectrum, points: np.ndarray) -> np.ndarray:
    """Dense matrix ``phi_k(x_i)`` at arbitrary points (rows) - the reference oracle path."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    scale = np.pi / np.asarray(spectrum.domain.side_lengths)
    phase = pts[:, None, :] * (spectrum.modes * scale)[None, :, :]
    return spectrum.normalization * np.prod(np.sin(phase), axis=2)
