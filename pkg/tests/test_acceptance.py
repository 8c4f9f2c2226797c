"""Acceptance criteria, each at its stated tolerance, one PASS/FAIL line per criterion.

Run directly (``python3 tests/test_acceptance.py``) or through pytest; pytest repeats the
lines in its terminal summary.
"""
import math
import sys
import time

import numpy as np
import pytest

from relgalerkin import bubbles
from relgalerkin.cylinder import nehari_identity_residual, pohozaev_residual, trace_coercivity_check
from relgalerkin.eigenbasis import Domain, analyze_array, enumerate_modes, make_grid, synthesize_array
from relgalerkin.field import SpectralField, energy_gradient, energy_Im
from relgalerkin.perturbative import rate_study, solve_limit
from relgalerkin.spectral_calculus import (apply_2mPm, check_symbol_derivative_bounds,
                                           default_lambda_grid, inverse_difference_exact,
                                           invert_2mPm)
from relgalerkin.variational import (SolverConfig, mountain_pass_level_bound, nonexistence_probe,
                                     solve_least_energy)

RESULTS: list[str] = []


def record(number: int, title: str, checks: list[tuple[str, bool]], elapsed: float) -> bool:
    ok = all(c for _, c in checks)
    failed = [name for name, c in checks if not c]
    line = f"criterion {number} {title}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f}s)"
    if failed:
        line += " failing: " + "; ".join(failed)
    RESULTS.append(line)
    print(line)
    for name, c in checks:
        print(f"    [{'ok' if c else 'FAIL'}] {name}")
    return ok


def test_criterion_1_bubbles():
    t0 = time.time()
    checks = []
    rng = np.random.default_rng(1)
    for n in (2, 3, 4, 5):
        worst = 0.0
        for _ in range(5):
            p = bubbles.BubbleParams(n, rng.uniform(0.1, 10), tuple(rng.standard_normal(n)))
            pts = np.asarray(p.center) + rng.standard_normal((50, n)) * rng.uniform(0.1, 10)
            worst = max(worst, bubbles.verify_entire_equation(p, pts))
        checks.append((f"entire equation n={n}: {worst:.2e} <= 1e-10", worst <= 1e-10))
    for n in (2, 3):
        err = bubbles.sharp_norm_check(n).rel_error
        checks.append((f"sharp norm n={n}: {err:.2e} <= 1e-6", err <= 1e-6))
    assert record(1, "bubble identities", checks, time.time() - t0)


def test_criterion_2_operator_calculus():
    t0 = time.time()
    checks = []
    rng = np.random.default_rng(2)
    worst = 0.0
    for dom, N in ((Domain((np.pi,)), 32), (Domain((1.0, 2.0)), 12), (Domain.cube(3), 10),
                   (Domain((1.0, 1.3, 0.8, 2.0)), 6)):
        g = make_grid(enumerate_modes(dom, N))
        c = rng.uniform(-1, 1, g.spectrum.size)
        worst = max(worst, np.abs(analyze_array(synthesize_array(c, g), g) - c).max())
    checks.append((f"analyze/synthesize round trip {worst:.2e} <= 1e-12", worst <= 1e-12))
    sp = enumerate_modes(Domain.cube(3), 10)
    u = SpectralField(sp, rng.standard_normal(sp.size))
    worst = 0.0
    for m in (0.01, 1.0, 256.0):
        back = invert_2mPm(apply_2mPm(u, m), m).coeffs
        worst = max(worst, np.linalg.norm(back - u.coeffs) / np.linalg.norm(u.coeffs))
    checks.append((f"invert_2mPm back-substitution {worst:.2e} <= 1e-12", worst <= 1e-12))
    lam1 = sp.lambda1
    grid = default_lambda_grid(lam1)
    masses = [float(2 ** k) for k in range(1, 9)]
    rows = [r for r in check_symbol_derivative_bounds(0, masses, grid, lam1)
            if r.quantity == "inverse_difference"]
    const = max(r.constant for r in rows)
    checks.append((f"symbol difference constant {const:.4f} <= 1.0", const <= 1.0))
    # analytic oracle 1/(2m(sqrt(lam+m^2)+m)) on lam >= lambda1
    sel = grid[grid >= lam1]
    oracle = max((np.abs(inverse_difference_exact(sel, m))
                  / np.minimum(1 / m ** 2, 1 / (m * np.sqrt(sel + 1)))).max() for m in masses)
    checks.append((f"oracle constant {oracle:.4f} <= reported and <= 1", oracle <= const * (1 + 1e-12) and oracle <= 1))
    assert record(2, "operator calculus", checks, time.time() - t0)


def test_criterion_3_identity_diagnostics():
    t0 = time.time()
    dom = Domain.cube(3)
    g = make_grid(enumerate_modes(dom, 12))
    rep = solve_least_energy(dom, 1.0, 1.5, SolverConfig(N=12), grid=g)
    checks = [(f"converged in {rep.iterations} iterations", rep.converged),
              (f"equation residual {rep.residual:.2e} <= 1e-8", rep.residual <= 1e-8)]
    neh = nehari_identity_residual(rep.solution, 1.0, 1.5, g)
    checks.append((f"Nehari identity residual {neh:.2e} <= 1e-6", neh <= 1e-6))
    rng = np.random.default_rng(3)
    held = 0
    for _ in range(100):
        c = rng.standard_normal(g.spectrum.size) * rng.uniform(0.1, 10)
        held += trace_coercivity_check(SpectralField(g.spectrum, c), rng.uniform(0, 10)).holds
    checks.append((f"trace inequality on {held}/100 random fields", held == 100))
    res = {}
    for N in (8, 16):
        gN = make_grid(enumerate_modes(dom, N))
        r = solve_least_energy(dom, 1.0, 1.5, SolverConfig(N=N, diagnostics=False), grid=gN)
        res[N] = pohozaev_residual(r.solution, 1.0, 1.5, gN)
    factor = res[8] / res[16]
    checks.append((f"Pohozaev residual {res[8]:.2e} -> {res[16]:.2e}, factor {factor:.2f} >= 4", factor >= 4))
    assert record(3, "identity diagnostics", checks, time.time() - t0)


def test_criterion_4_critical_case():
    t0 = time.time()
    dom = Domain.cube(3)
    threshold = bubbles.sharp_constant(3) ** -6 / 6
    checks = []
    # the smallest mass needs the finest truncation to resolve the concentrated profile
    for m, N in ((0.1, 24), (1.0, 12), (10.0, 12)):
        rep = solve_least_energy(dom, m, 2.0, SolverConfig(N=N, diagnostics=False))
        checks.append((f"m={m} N={N}: converged={rep.converged}, energy {rep.energy:.5f} < {threshold:.5f}",
                       rep.converged and rep.energy < threshold))
    rows = mountain_pass_level_bound(dom, 1.0, [0.2, 0.1, 0.05], N=12)
    small = rows[-1]
    checks.append((f"level bound flag at lambda_scale={small.lambda_scale}: level {small.level:.5f}",
                   small.flag))
    assert record(4, "critical case", checks, time.time() - t0)


def _rate(n, p, N, lo, hi, checks):
    dom = Domain.cube(n)
    limit = solve_limit(p, dom, SolverConfig(N=N, tol=1e-12, diagnostics=False))
    st = rate_study(p, [16.0, 32.0, 64.0, 128.0, 256.0], limit)
    checks.append((f"n={n} p={p}: all m converged", not st.excluded))
    checks.append((f"n={n} p={p}: slope {st.slope:.4f} in [{lo}, {hi}]", lo <= st.slope <= hi))
    f = [r.contraction_factor for r in st.rows]
    checks.append((f"n={n} p={p}: contraction factors {', '.join(f'{x:.2e}' for x in f)} < 1 and decreasing",
                   max(f) < 1 and all(b < a for a, b in zip(f, f[1:]))))
    fine = solve_limit(p, dom, SolverConfig(N=2 * N, tol=1e-12, diagnostics=False))
    drift = abs(fine.sigma_min - limit.sigma_min) / limit.sigma_min
    checks.append((f"n={n} p={p}: sigma_min {limit.sigma_min:.5f} (N={N}) vs {fine.sigma_min:.5f} (N={2 * N}), drift {drift:.1e} <= 0.1",
                   drift <= 0.1))


def test_criterion_5_rates():
    t0 = time.time()
    checks = []
    _rate(3, 3.0, 12, -2.4, -1.6, checks)
    _rate(4, 1.8, 8, -1.3, -0.7, checks)
    assert record(5, "large-mass rates", checks, time.time() - t0)


def test_criterion_6_nonexistence_probe():
    t0 = time.time()
    dom = Domain.cube(3)
    Ns = [6, 8, 10, 12]
    sup = nonexistence_probe(dom, 1.0, 5.0, Ns, SolverConfig())
    sub = nonexistence_probe(dom, 1.0, 1.5, Ns, SolverConfig())
    per_doubling = lambda rows: (rows[0].pohozaev / rows[-1].pohozaev) ** (math.log(2) / math.log(Ns[-1] / Ns[0]))
    d_sup, d_sub = per_doubling(sup), per_doubling(sub)
    checks = [
        (f"p=5 residuals {', '.join(f'{r.pohozaev:.3f}' for r in sup)}: decay {d_sup:.2f} per doubling", True),
        (f"p=1.5 residuals {', '.join(f'{r.pohozaev:.1e}' for r in sub)}: decay {d_sub:.2f} per doubling", True),
        (f"supercritical decay {d_sup:.2f} < subcritical decay {d_sub:.2f}", d_sup < d_sub),
    ]
    assert record(6, "nonexistence probe", checks, time.time() - t0)


def test_criterion_7_gradient():
    t0 = time.time()
    rng = np.random.default_rng(7)
    g = make_grid(enumerate_modes(Domain.cube(3), 8))
    sp = g.spectrum
    worst = 0.0
    for _ in range(20):
        u = SpectralField(sp, rng.standard_normal(sp.size) / np.sqrt(1 + sp.eigenvalues))
        v = SpectralField(sp, rng.standard_normal(sp.size))
        m, p = rng.uniform(0.05, 20), rng.uniform(1.2, 5)
        h = 1e-5
        fd = (energy_Im(u + h * v, m, p, g) - energy_Im(u - h * v, m, p, g)) / (2 * h)
        an = float(energy_gradient(u, m, p, g) @ v.coeffs)
        worst = max(worst, abs(fd - an) / abs(an))
    assert record(7, "gradient", [(f"worst relative FD gap {worst:.2e} <= 1e-6", worst <= 1e-6)],
                  time.time() - t0)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
