"""Experiment configuration, validation and the per-kind drivers."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import bubbles, cylinder, perturbative, spectral_calculus, variational
from .eigenbasis import Domain, enumerate_modes, make_grid
from .errors import RelGalerkinError
from .report import Report, table

KINDS = ("solve", "rate-study", "pohozaev", "symbol-check", "bubble-check",
         "mp-level", "nonexistence-probe")


class ConfigError(RelGalerkinError, ValueError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


_pos = {"type": "number", "exclusiveMinimum": 0}
SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": list(KINDS)},
        "n": {"type": "integer", "minimum": 1, "maximum": 4},
        "side_lengths": {"type": ["array", "null"], "items": _pos, "minItems": 1, "maxItems": 4},
        "p": {"type": ["number", "null"], "exclusiveMinimum": 1},
        "m": {"type": ["number", "null"], "minimum": 0},
        "m_list": {"type": ["array", "null"], "items": _pos, "minItems": 1},
        "N": {"type": ["integer", "null"], "minimum": 1},
        "N_list": {"type": ["array", "null"], "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "tol": _pos,
        "max_iter": {"type": "integer", "minimum": 1},
        "lambda_scales": {"type": ["array", "null"], "items": _pos, "minItems": 1},
        "k_max": {"type": "integer", "minimum": 0, "maximum": 2},
        "control_p": {"type": ["number", "null"], "exclusiveMinimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "out": {"type": "string"},
        "threads": {"type": ["integer", "null"], "minimum": 1},
        "figures": {"type": "boolean"},
    },
    "required": ["kind"],
}

# kind-specific defaults (applied below the file and the flags)
DEFAULTS: dict[str, dict[str, Any]] = {
    "solve": {"n": 3, "p": 1.5, "m": 1.0, "N": 12},
    "rate-study": {"n": 3, "p": 3.0, "N": 12, "m_list": [16.0, 32.0, 64.0, 128.0, 256.0]},
    "pohozaev": {"n": 3, "p": 1.5, "m": 1.0, "N_list": [8, 16]},
    "symbol-check": {"m_list": [2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0], "k_max": 2},
    "bubble-check": {"n": 3},
    "mp-level": {"n": 3, "m": 1.0, "N": 12, "lambda_scales": [0.6, 0.4, 0.3, 0.2, 0.1, 0.05]},
    "nonexistence-probe": {"n": 3, "p": 5.0, "m": 1.0, "N_list": [6, 8, 10, 12], "control_p": 1.5},
}


@dataclass
class ExperimentConfig:
    kind: str
    n: int = 3
    side_lengths: list[float] | None = None
    p: float | None = None
    m: float | None = None
    m_list: list[float] | None = None
    N: int | None = None
    N_list: list[int] | None = None
    tol: float = 1e-9
    max_iter: int = 5000
    lambda_scales: list[float] | None = None
    k_max: int = 2
    control_p: float | None = None
    seed: int = 0
    out: str = "out"
    threads: int | None = None
    figures: bool = True

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        validate(data)
        cfg = cls(**data)
        check_semantics(cfg)
        return cfg

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def domain(self) -> Domain:
        if self.side_lengths is None:
            return Domain.cube(self.n)
        return Domain(tuple(self.side_lengths))


def validate(data: dict) -> None:
    v = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(v.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "/".join(str(s) for s in e.absolute_path) or "<root>"
        raise ConfigError(e.message, path)


def check_semantics(cfg: ExperimentConfig) -> None:
    need = {
        "solve": ("p", "m", "N"), "rate-study": ("p", "N", "m_list"),
        "pohozaev": ("p", "m", "N_list"), "symbol-check": ("m_list",),
        "bubble-check": (), "mp-level": ("m", "N", "lambda_scales"),
        "nonexistence-probe": ("p", "m", "N_list", "control_p"),
    }[cfg.kind]
    for name in need:
        if getattr(cfg, name) is None:
            raise ConfigError(f"required for kind {cfg.kind!r}", name)
    if cfg.side_lengths is not None and len(cfg.side_lengths) != cfg.n:
        raise ConfigError(f"expected {cfg.n} side lengths", "side_lengths")
    n = cfg.n
    if cfg.kind in ("solve", "pohozaev") and n > 2 and cfg.p >= 2 * n / (n - 2):
        raise ConfigError(f"p={cfg.p} outside (1, {2 * n / (n - 2):g}) for the variational path", "p")
    if cfg.kind in ("solve", "pohozaev", "nonexistence-probe") and not cfg.m > 0:
        raise ConfigError("mass must be positive", "m")
    if cfg.kind == "rate-study":
        if n > 2 and cfg.p >= (n + 2) / (n - 2):
            raise ConfigError(f"limit problem needs p < {(n + 2) / (n - 2):g}", "p")
        if any(b <= a for a, b in zip(cfg.m_list, cfg.m_list[1:])):
            raise ConfigError("must be strictly ascending", "m_list")
    if cfg.kind == "symbol-check" and min(cfg.m_list) < 2:
        raise ConfigError("masses must be >= 2", "m_list")
    if cfg.kind in ("bubble-check", "mp-level") and n < 2:
        raise ConfigError("needs n >= 2", "n")


def merge(kind: str, file_data: dict | None, flags: dict) -> ExperimentConfig:
    """flags > file > defaults."""
    data: dict[str, Any] = {"kind": kind}
    data.update(DEFAULTS[kind])
    if file_data:
        if file_data.get("kind", kind) != kind:
            raise ConfigError(f"config file is for {file_data['kind']!r}", "kind")
        data.update(file_data)
    data.update({k: v for k, v in flags.items() if v is not None})
    return ExperimentConfig.from_dict(data)


def load_config_file(path: str | Path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(str(exc), "--config") from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object", "<root>")
    return data


# ---------------------------------------------------------------------------
# drivers


def _solver(cfg: ExperimentConfig, **kw) -> variational.SolverConfig:
    return variational.SolverConfig(N=kw.pop("N", cfg.N or 12), tol=cfg.tol,
                                    max_iter=cfg.max_iter, seed=cfg.seed, **kw)


def run_solve(cfg: ExperimentConfig) -> Report:
    rep = variational.solve_least_energy(cfg.domain(), cfg.m, cfg.p, _solver(cfg))
    out = Report("solve", summary=rep.summary())
    tr = table("solve_trace")
    for i, e in enumerate(rep.trace):
        tr.add(i, e)
    out.tables.append(tr)
    out.check("converged", rep.converged, f"residual {rep.residual:.3e} after {rep.iterations} iterations")
    return out


def run_rate_study(cfg: ExperimentConfig) -> Report:
    solver = variational.SolverConfig(N=cfg.N, tol=min(cfg.tol, 1e-12), max_iter=cfg.max_iter,
                                      diagnostics=False)
    limit = perturbative.solve_limit(cfg.p, cfg.domain(), solver)
    study = perturbative.rate_study(cfg.p, cfg.m_list, limit)
    out = Report("rate-study", summary={**study.summary(), "sigma_min": limit.sigma_min,
                                        "limit_residual": limit.residual, "N": cfg.N})
    tab = table("rate_study")
    for r in study.rows:
        tab.add(r.m, r.error, r.contraction_factor)
    out.tables.append(tab)
    lo, hi = (-2.4, -1.6) if cfg.p > 2 else (-1.3, -0.7)
    out.summary["slope_window"] = [lo, hi]
    out.check("all m converged", not study.excluded, str(study.excluded) if study.excluded else "")
    out.check("slope in window", lo <= study.slope <= hi, f"slope {study.slope:.4f}")
    f = [r.contraction_factor for r in study.rows]
    out.check("contraction < 1 and decreasing",
              all(x < 1 for x in f) and all(b < a for a, b in zip(f, f[1:])))
    return out


def run_pohozaev(cfg: ExperimentConfig) -> Report:
    dom = cfg.domain()
    tab = table("pohozaev")
    residuals = []
    for N in cfg.N_list:
        grid = make_grid(enumerate_modes(dom, N))
        rep = variational.solve_least_energy(dom, cfg.m, cfg.p, _solver(cfg, N=N, diagnostics=False), grid)
        terms = cylinder.pohozaev_terms(rep.solution, cfg.m, cfg.p, grid)
        for name, val in zip(("gradient_x", "gradient_t", "mass_bulk", "nonlinear", "mass_trace", "lateral"),
                             terms.as_array()):
            tab.add(N, name, float(val))
        tab.add(N, "residual", terms.residual)
        residuals.append(terms.residual)
    out = Report("pohozaev", summary={"N_list": list(cfg.N_list), "residuals": residuals})
    out.tables.append(tab)
    if len(residuals) >= 2:
        N0, N1 = cfg.N_list[0], cfg.N_list[-1]
        factor = (residuals[0] / residuals[-1]) ** (math.log(2) / math.log(N1 / N0))
        out.summary["decay_per_doubling"] = factor
        out.check("decay >= 4 per doubling", factor >= 4.0, f"{factor:.3f}")
    return out


def run_symbol_check(cfg: ExperimentConfig) -> Report:
    lambda1 = cfg.domain().first_eigenvalue()
    rows = spectral_calculus.check_symbol_derivative_bounds(
        cfg.k_max, cfg.m_list, spectral_calculus.default_lambda_grid(lambda1), lambda1)
    tab = table("symbol_bounds")
    for r in rows:
        tab.add(r.quantity, r.k, r.m, r.constant)
    k0 = [r.constant for r in rows if r.quantity == "inverse_difference" and r.k == 0]
    out = Report("symbol-check", summary={"lambda1": lambda1, "inverse_difference_k0_max": max(k0)})
    out.tables.append(tab)
    out.check("inverse difference constant <= 1 (k=0)", max(k0) <= 1.0, f"{max(k0):.6f}")
    return out


def run_bubble_check(cfg: ExperimentConfig) -> Report:
    n = cfg.n
    rng = np.random.default_rng(cfg.seed)
    params = bubbles.BubbleParams(n, 1.0 + rng.random(), tuple(rng.standard_normal(n)))
    pts = np.asarray(params.center) + 3.0 * rng.standard_normal((64, n))
    eq = bubbles.verify_entire_equation(params, pts)
    sharp = bubbles.sharp_norm_check(n)
    tab = table("bubble")
    tab.add(n, "entire_equation", eq)
    tab.add(n, "sharp_norm_rel_error", sharp.rel_error)
    tab.add(n, "sharp_norm_integral", sharp.integral)
    tab.add(n, "S_n^-2n", sharp.target)
    out = Report("bubble-check", summary={"n": n, "entire_equation": eq, "integral": sharp.integral,
                                          "target": sharp.target, "rel_error": sharp.rel_error,
                                          "gamma_self_check": bubbles.gamma_self_check()})
    out.tables.append(tab)
    out.check("entire equation <= 1e-10", eq <= 1e-10, f"{eq:.3e}")
    out.check("sharp norm <= 1e-6", sharp.rel_error <= 1e-6, f"{sharp.rel_error:.3e}")
    return out


def run_mp_level(cfg: ExperimentConfig) -> Report:
    rows = variational.mountain_pass_level_bound(cfg.domain(), cfg.m, cfg.lambda_scales, N=cfg.N)
    tab = table("mp_level")
    for r in rows:
        tab.add(r.lambda_scale, r.level, r.threshold, r.flag)
    smallest = min(rows, key=lambda r: r.lambda_scale)
    out = Report("mp-level", summary={"threshold": rows[0].threshold,
                                      "levels": [r.level for r in rows],
                                      "flags": [r.flag for r in rows]})
    out.tables.append(tab)
    out.check("flag at smallest scale", smallest.flag,
              f"level {smallest.level:.6f} vs {smallest.threshold:.6f}")
    return out


def run_nonexistence(cfg: ExperimentConfig) -> Report:
    dom = cfg.domain()
    base = _solver(cfg, diagnostics=False)
    sup = variational.nonexistence_probe(dom, cfg.m, cfg.p, cfg.N_list, base)
    sub = variational.nonexistence_probe(dom, cfg.m, cfg.control_p, cfg.N_list, base)
    tab = table("nonexistence")
    for r in sup:
        tab.add(r.N, r.linf, r.energy, r.pohozaev, r.residual, r.converged)
    f_sup = variational.decay_factors(sup)
    f_sub = variational.decay_factors(sub)
    # decay over the whole sweep, per doubling
    overall = lambda rows: (rows[0].pohozaev / rows[-1].pohozaev) ** (math.log(2) / math.log(rows[-1].N / rows[0].N))
    d_sup, d_sub = overall(sup), overall(sub)
    out = Report("nonexistence-probe", summary={
        "p": cfg.p, "control_p": cfg.control_p, "decay_supercritical": d_sup,
        "decay_subcritical": d_sub, "step_factors_supercritical": f_sup,
        "step_factors_subcritical": f_sub,
        "pohozaev_subcritical": [r.pohozaev for r in sub]})
    out.tables.append(tab)
    out.check("supercritical decays slower than control", d_sup < d_sub,
              f"{d_sup:.3f} vs {d_sub:.3f}")
    return out


DRIVERS = {
    "solve": run_solve, "rate-study": run_rate_study, "pohozaev": run_pohozaev,
    "symbol-check": run_symbol_check, "bubble-check": run_bubble_check,
    "mp-level": run_mp_level, "nonexistence-probe": run_nonexistence,
}


def run_experiment(cfg: ExperimentConfig) -> Report:
    return DRIVERS[cfg.kind](cfg)
