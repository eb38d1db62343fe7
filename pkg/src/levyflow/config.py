"""Sectioned key-value run configuration: parsing, emission, and assembly.

The format is INI-style text handled by :mod:`configparser`.  Every key is
typed against a schema; unknown sections or keys are fatal with their
location, and numeric emission uses 17 significant digits so that
emit -> parse round-trips exactly.  Assembling a configuration into live
model/noise objects validates the semantic constraints, in particular the
strict [0, 2) range of the V-norm noise weights.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace

import numpy as np

from . import models, noise, nse2d
from .solver import SolverConfig
from .spaces import SpectralBasis


class ConfigError(ValueError):
    pass


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, tuple):
        return ", ".join(f"{v:.17g}" for v in value)
    return str(value)


def _parse_bool(s: str) -> bool:
    if s.lower() in ("true", "1", "yes", "on"):
        return True
    if s.lower() in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_floats(s: str) -> tuple:
    if not s.strip():
        return ()
    return tuple(float(p) for p in s.split(","))


@dataclass(frozen=True)
class ModelSection:
    name: str = "dyadic"
    modes: int = 16
    k0: float = 2.0
    visc: float = 1.0
    dealias: bool = True
    u0: str = "e1:1.0"
    a0: float = 0.0       # 0 means: use the model's own constant
    c_b: float = 0.0


@dataclass(frozen=True)
class MeasureSection:
    family: str = "none"
    rate: float = 0.0
    mean: float = 0.0
    sd: float = 1.0
    c: float = 1.0
    alpha: float = 0.5
    eps_low: float = 0.01
    r_max: float = 1.0


@dataclass(frozen=True)
class WienerSection:
    dims: int = 0


@dataclass(frozen=True)
class CoefficientSection:
    g_family: str = "none"
    g_sigma: tuple = (0.0,)
    g_theta: float = 0.0
    psi_family: str = "none"
    psi_sigma: tuple = (0.0,)
    psi_theta: float = 0.0
    forcing: str = "zero"


@dataclass(frozen=True)
class SolverSection:
    horizon: float = 1.0
    dt: float = 0.01
    tol_picard: float = 1e-8
    max_picard: int = 25
    window: float = 0.1
    budget: float = 0.5
    level: float = 10.0
    level_growth: float = 2.0
    max_levels: int = 12
    stepper: str = "resolvent"
    inner_mode: str = "direct"
    max_inner: int = 50
    budget_ceiling: float = 1e12


@dataclass(frozen=True)
class EnsembleSection:
    paths: int = 1
    seed: int = 12345


@dataclass(frozen=True)
class OutputSection:
    dir: str = ""
    per_mode: bool = False


@dataclass(frozen=True)
class VerifySection:
    structure_samples: int = 20000
    condition_samples: int = 2000
    noise_paths: int = 2000
    apriori_paths: int = 0


@dataclass(frozen=True)
class ConvergeSection:
    iterations: int = 8
    paths: int = 20
    order_paths: int = 12
    ratio_threshold: float = 0.8
    order_min: float = 0.4
    t0_list: tuple = ()
    delta0_list: tuple = ()
    dt_list: tuple = ()


@dataclass(frozen=True)
class RunConfig:
    model: ModelSection = ModelSection()
    measure: MeasureSection = MeasureSection()
    wiener: WienerSection = WienerSection()
    coefficient: CoefficientSection = CoefficientSection()
    solver: SolverSection = SolverSection()
    ensemble: EnsembleSection = EnsembleSection()
    output: OutputSection = OutputSection()
    verify: VerifySection = VerifySection()
    converge: ConvergeSection = ConvergeSection()


_SECTIONS = {
    "model": ModelSection,
    "measure": MeasureSection,
    "wiener": WienerSection,
    "coefficient": CoefficientSection,
    "solver": SolverSection,
    "ensemble": EnsembleSection,
    "output": OutputSection,
    "verify": VerifySection,
    "converge": ConvergeSection,
}

_PARSERS = {int: int, float: float, str: str, bool: _parse_bool, tuple: _parse_floats}


def parse_config(text: str, overrides: list[str] | None = None) -> RunConfig:
    """Parse sectioned key-value text; unknown keys are fatal with location."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    raw: dict[str, dict[str, str]] = {s: dict(cp.items(s)) for s in cp.sections()}
    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value: {item!r}")
        key, value = item.split("=", 1)
        section, name = key.strip().split(".", 1)
        raw.setdefault(section.strip(), {})[name.strip()] = value.strip()

    sections = {}
    for sec_name, values in raw.items():
        if sec_name not in _SECTIONS:
            raise ConfigError(f"unknown section [{sec_name}]")
        cls = _SECTIONS[sec_name]
        by_name = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in values.items():
            if key not in by_name:
                raise ConfigError(f"unknown key {key!r} in section [{sec_name}]")
            ftype = by_name[key].type
            pytype = {"int": int, "float": float, "str": str, "bool": bool,
                      "tuple": tuple}[ftype]
            try:
                kwargs[key] = _PARSERS[pytype](value)
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for {key!r} in section [{sec_name}]: {exc}") from exc
        sections[sec_name] = cls(**kwargs)
    if "name" not in raw.get("model", {}):
        raise ConfigError("missing required key 'name' in section [model]")
    return RunConfig(**sections)


def emit_config(cfg: RunConfig) -> str:
    """Serialize a configuration; parse(emit(cfg)) == cfg."""
    lines = []
    for sec_name, cls in _SECTIONS.items():
        section = getattr(cfg, sec_name)
        lines.append(f"[{sec_name}]")
        for f in fields(cls):
            lines.append(f"{f.name} = {_fmt(getattr(section, f.name))}")
        lines.append("")
    return "\n".join(lines)


def config_as_dict(cfg: RunConfig) -> dict:
    return {sec: {f.name: getattr(getattr(cfg, sec), f.name)
                  for f in fields(cls)}
            for sec, cls in _SECTIONS.items()}


def resolve_vector(spec: str, dim: int, what: str) -> np.ndarray:
    """Resolve 'zero', 'e<k>:<amp>' or a comma list into a coefficient vector."""
    spec = spec.strip()
    if spec == "zero":
        return np.zeros(dim)
    if spec.startswith("e"):
        try:
            head, amp = spec.split(":")
            k = int(head[1:])
        except ValueError as exc:
            raise ConfigError(f"bad {what} shorthand {spec!r}") from exc
        if not 1 <= k <= dim:
            raise ConfigError(f"{what} mode {k} outside 1..{dim}")
        out = np.zeros(dim)
        out[k - 1] = float(amp)
        return out
    values = np.array([float(p) for p in spec.split(",")])
    if values.shape != (dim,):
        raise ConfigError(f"{what} needs {dim} entries, got {values.size}")
    return values


@dataclass(frozen=True)
class Setup:
    """Live objects assembled from a configuration."""

    cfg: RunConfig
    model: models.ModelSpec
    measure: noise.LevyMeasureSpec
    wiener: noise.WienerDriverSpec
    coeff: noise.CoefficientSpec
    u0: np.ndarray
    solver: SolverConfig
    visc: float


def build_measure(cfg: RunConfig) -> noise.LevyMeasureSpec:
    m = cfg.measure
    if m.family == "none":
        return noise.no_jumps()
    if m.family == "compound_gaussian":
        return noise.compound_gaussian(m.rate, m.mean, m.sd)
    if m.family == "truncated_power":
        return noise.truncated_power(m.c, m.alpha, m.eps_low, m.r_max)
    raise ConfigError(f"unknown measure family {m.family!r}")


def build_model(cfg: RunConfig) -> tuple[models.ModelSpec, float]:
    m = cfg.model
    if m.name == "dyadic":
        params = models.DyadicShellParams(n_modes=m.modes, k0=m.k0, visc=m.visc)
        spec = models.dyadic_model(params)
    elif m.name == "nse2d":
        params = nse2d.Nse2dParams(modes_per_axis=m.modes, visc=m.visc,
                                   dealias=m.dealias)
        spec = nse2d.nse2d_model(params)
    elif m.name == "zero_b":
        lam = m.visc * (m.k0 * 2.0 ** np.arange(m.modes)) ** 2
        spec = models.zero_b_model(SpectralBasis(lam))
    else:
        raise ConfigError(f"unknown model {m.name!r}")
    if m.a0 > 0:
        spec = replace(spec, a0=m.a0)
    if m.c_b > 0:
        spec = replace(spec, c_b=m.c_b)
    return spec, m.visc


def _family_from(section: CoefficientSection, which: str, dim: int) -> noise.CoefficientFamily:
    kind = getattr(section, f"{which}_family")
    sigma = getattr(section, f"{which}_sigma")
    theta = getattr(section, f"{which}_theta")
    if kind in ("additive", "diagonal"):
        sig = sigma[0] if len(sigma) == 1 else np.asarray(sigma)
        return noise.family(kind, dim, sigma=sig)
    if kind in ("none", "gradient"):
        return noise.family(kind, dim, theta=theta)
    raise ConfigError(f"unknown coefficient family {kind!r}")


def build_setup(cfg: RunConfig) -> Setup:
    """Assemble and semantically validate every object a run needs."""
    model, visc = build_model(cfg)
    measure = build_measure(cfg)
    wiener = noise.WienerDriverSpec(dims=cfg.wiener.dims)
    dim = model.basis.dim
    g = _family_from(cfg.coefficient, "g", dim)
    psi = _family_from(cfg.coefficient, "psi", dim)
    forcing = resolve_vector(cfg.coefficient.forcing, dim, "forcing")
    try:
        coeff = noise.build_coefficients(g, psi, measure, model.basis, visc,
                                         wiener, forcing)
    except noise.GrowthConditionError as exc:
        raise ConfigError(str(exc)) from exc
    u0 = resolve_vector(cfg.model.u0, dim, "u0")
    s = cfg.solver
    solver = SolverConfig(
        horizon=s.horizon, dt=s.dt, tol_picard=s.tol_picard,
        max_picard=s.max_picard, window=s.window, budget=s.budget,
        level=s.level, level_growth=s.level_growth, max_levels=s.max_levels,
        stepper=s.stepper, inner_mode=s.inner_mode, max_inner=s.max_inner,
        budget_ceiling=s.budget_ceiling)
    return Setup(cfg=cfg, model=model, measure=measure, wiener=wiener,
                 coeff=coeff, u0=u0, solver=solver, visc=visc)


def load_config(text: str, overrides: list[str] | None = None) -> tuple[RunConfig, Setup]:
    cfg = parse_config(text, overrides)
    return cfg, build_setup(cfg)
