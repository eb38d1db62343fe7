"""Cutoff fixed-point solver, window concatenation, and the direct scheme.

One time step of the linearized equation treats the operator semi-implicitly
(resolvent, or exact exponential) and everything else explicitly:

    y_{k+1} = S_dt [ y_k + dt (f_k - c_k B(a_k, y_k))
                     + Psi(t_k, y_k) dW_k + sum_jumps G(t_k, y_k, z)
                     - dt * compensator(y_k) ],

where a is the frozen advecting path and c_k combines the state-level and
dissipation-budget cutoffs evaluated on it.  Jump coefficients use the
left-endpoint state, so jumps inside a step commute and are applied in time
order by summation.

The fixed-point loop starts from the zero path and re-solves against the
previous iterate until the sup-norm plus dissipation-norm increment falls
below tolerance.  Windows are concatenated at the first grid time whose
accumulated dissipation norm spends the budget (capped at the window
length), and the whole construction is patched in the level m: if the path
reaches level m the level is grown and the same noise is re-solved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import diagnostics
from .cutoffs import Cutoff
from .models import ModelSpec
from .noise import (CoefficientSpec, LevyMeasureSpec, NoiseRealization,
                    compensator_drift, jump_coefficient, wiener_apply)
from .spaces import (GalerkinVector, NonFiniteStateError, PathSegment,
                     h_norm, v_norm_sq_rows, zero_path)


class PicardDivergenceError(RuntimeError):
    """The fixed-point loop failed to contract even after window shrinking."""


class BlowupError(RuntimeError):
    """Accumulated dissipation passed the configured ceiling.

    The continuation criterion is that the dissipation integral stays
    finite up to the horizon; passing the ceiling is treated as numerical
    blow-up.
    """


@dataclass(frozen=True)
class SolverConfig:
    horizon: float
    dt: float
    tol_picard: float = 1e-8
    max_picard: int = 25
    window: float = 0.1          # local fixed-point window length
    budget: float = 0.5          # dissipation-norm budget per window
    level: float = 10.0          # initial state-norm cutoff level
    level_growth: float = 2.0
    max_levels: int = 12
    stepper: str = "resolvent"   # resolvent | exponential
    inner_mode: str = "direct"   # direct | h_iteration
    max_inner: int = 50
    budget_ceiling: float = 1e12  # abort when int ||u||^2 passes this

    def __post_init__(self):
        if self.dt <= 0 or self.horizon < self.dt:
            raise ValueError("need 0 < dt <= horizon")
        if self.window <= 0 or self.budget <= 0:
            raise ValueError("window and budget must be positive")
        if self.tol_picard < 0 or self.max_picard < 1:
            raise ValueError("bad fixed-point controls")
        if self.stepper not in ("resolvent", "exponential"):
            raise ValueError(f"unknown stepper {self.stepper!r}")
        if self.inner_mode not in ("direct", "h_iteration"):
            raise ValueError(f"unknown inner mode {self.inner_mode!r}")
        if self.level <= 0 or self.level_growth <= 1 or self.max_levels < 1:
            raise ValueError("bad level controls")

    @property
    def n_steps(self) -> int:
        k = int(round(self.horizon / self.dt))
        if abs(k * self.dt - self.horizon) > 1e-9 * max(1.0, self.horizon):
            raise ValueError("horizon must be a whole number of steps")
        return k

    @property
    def window_steps(self) -> int:
        return max(1, int(round(self.window / self.dt)))


@dataclass
class IterationReport:
    """Per-iterate increments and capped diagnostics of one fixed-point run."""

    sup_increments: list = field(default_factory=list)
    xi_increments: list = field(default_factory=list)
    cross_integrals: list = field(default_factory=list)   # convection cross terms
    budget_integrals: list = field(default_factory=list)  # capped energy densities
    converged: bool = False
    iterations_used: int = 0


@dataclass(frozen=True)
class SolveOutcome:
    trajectory: PathSegment
    stop_times: list
    level_final: float
    blowup_flag: bool
    seed: int
    window_reports: list


def step_factors(model: ModelSpec, dt: float, stepper: str) -> np.ndarray:
    lam = model.basis.eigenvalues
    if stepper == "resolvent":
        return 1.0 / (1.0 + dt * lam)
    return np.exp(-dt * lam)


def linear_step(y: GalerkinVector, a: GalerkinVector, a_xi: float, t: float,
                dt: float, model: ModelSpec, coeff: CoefficientSpec,
                measure: LevyMeasureSpec, cutoff: Cutoff, f_k: np.ndarray,
                dw: np.ndarray, marks: np.ndarray,
                factors: np.ndarray) -> GalerkinVector:
    """One semi-implicit step of the equation linearized along ``a``."""
    c = cutoff.factor(h_norm(a), a_xi)
    if c != 0.0:
        drift = f_k - c * model.b_apply(a, y)
    else:
        drift = f_k
    acc = y + dt * drift
    if dw is not None and dw.size:
        acc = acc + wiener_apply(coeff, t, y, dw)
    if marks.size:
        jsum = jump_coefficient(coeff, t, y, float(marks[0]))
        for z in marks[1:]:
            jsum = jsum + jump_coefficient(coeff, t, y, float(z))
        acc = acc + jsum
    if measure.m1 != 0.0 and coeff.g.kind != "none":
        acc = acc - dt * compensator_drift(coeff, t, y, measure)
    out = factors * acc
    if not np.all(np.isfinite(out)):
        raise NonFiniteStateError(f"state became non-finite at t={t:.6g}")
    return out


def solve_linearized(advecting: PathSegment, noise: NoiseRealization,
                     cfg: SolverConfig, model: ModelSpec, coeff: CoefficientSpec,
                     measure: LevyMeasureSpec, cutoff: Cutoff,
                     u0: GalerkinVector) -> PathSegment:
    """Solve the equation with convection frozen along the advecting path."""
    n = noise.n_steps
    if advecting.n_steps != n:
        raise ValueError("advecting path and noise grids differ")
    basis = model.basis
    factors = step_factors(model, noise.dt, cfg.stepper)
    states = np.empty((n + 1, basis.dim))
    states[0] = u0
    f = coeff.f_at(noise.t0)
    for k in range(n):
        t = noise.t0 + k * noise.dt
        states[k + 1] = linear_step(
            states[k], advecting.states[k], float(np.sqrt(advecting.xi_sq[k])),
            t, noise.dt, model, coeff, measure, cutoff, f,
            noise.wiener[k], noise.marks_in_step(k), factors)
    return PathSegment.from_states(basis, noise.t0, noise.dt, states)


def inner_source_iteration(advecting: PathSegment, noise: NoiseRealization,
                           cfg: SolverConfig, model: ModelSpec,
                           coeff: CoefficientSpec, measure: LevyMeasureSpec,
                           cutoff: Cutoff, u0: GalerkinVector,
                           increments: list | None = None) -> PathSegment:
    """Fidelity mode: iterate the noise-argument path separately.

    The linear equation is stepped for the new path while every noise
    coefficient is evaluated on the previous inner iterate, starting from
    the semigroup path exp(-tA) u0.  For state-independent coefficients one
    pass already returns the direct solution.
    """
    n = noise.n_steps
    basis = model.basis
    factors = step_factors(model, noise.dt, cfg.stepper)
    f = coeff.f_at(noise.t0)
    lam = basis.eigenvalues
    source = np.exp(-np.outer(noise.dt * np.arange(n + 1), lam)) * u0
    prev = PathSegment.from_states(basis, noise.t0, noise.dt, source)
    for _ in range(cfg.max_inner):
        states = np.empty((n + 1, basis.dim))
        states[0] = u0
        for k in range(n):
            t = noise.t0 + k * noise.dt
            y = states[k]
            h = prev.states[k]
            a = advecting.states[k]
            c = cutoff.factor(h_norm(a), float(np.sqrt(advecting.xi_sq[k])))
            drift = f - c * model.b_apply(a, y) if c != 0.0 else f
            acc = y + noise.dt * drift
            dw = noise.wiener[k]
            if dw.size:
                acc = acc + wiener_apply(coeff, t, h, dw)
            marks = noise.marks_in_step(k)
            for z in marks:
                acc = acc + jump_coefficient(coeff, t, h, float(z))
            if measure.m1 != 0.0 and coeff.g.kind != "none":
                acc = acc - noise.dt * compensator_drift(coeff, t, h, measure)
            states[k + 1] = factors * acc
            if not np.all(np.isfinite(states[k + 1])):
                raise NonFiniteStateError(f"state became non-finite at t={t:.6g}")
        cur = PathSegment.from_states(basis, noise.t0, noise.dt, states)
        sup_inc, xi_inc = _path_increment(prev, cur, basis)
        if increments is not None:
            increments.append(sup_inc + xi_inc)
        prev = cur
        if sup_inc + xi_inc <= cfg.tol_picard:
            return cur
    raise PicardDivergenceError("inner source iteration did not converge")


def _path_increment(a: PathSegment, b: PathSegment, basis) -> tuple[float, float]:
    d = b.states - a.states
    sup = float(np.sqrt((d * d).sum(axis=1)).max())
    xi = float(np.sqrt(b.dt * v_norm_sq_rows(d[:-1], basis).sum()))
    return sup, xi


def picard_local(noise: NoiseRealization, cfg: SolverConfig, model: ModelSpec,
                 coeff: CoefficientSpec, measure: LevyMeasureSpec,
                 cutoff: Cutoff, u0: GalerkinVector, start_step: int = 0,
                 n_steps: int | None = None, force_n: int | None = None,
                 collect_diagnostics: bool = True) -> tuple[PathSegment, IterationReport]:
    """Iterate the linearized solve against its own output on one window."""
    if n_steps is None:
        n_steps = noise.n_steps - start_step
    local = noise.slice_steps(start_step, n_steps)
    basis = model.basis
    solver = solve_linearized if cfg.inner_mode == "direct" else inner_source_iteration

    report = IterationReport()
    prev = zero_path(basis, local.t0, local.dt, n_steps)
    before_prev = None
    limit = force_n if force_n is not None else cfg.max_picard
    cur = prev
    for n in range(1, limit + 1):
        cur = solver(prev, local, cfg, model, coeff, measure, cutoff, u0)
        sup_inc, xi_inc = _path_increment(prev, cur, basis)
        report.sup_increments.append(sup_inc)
        report.xi_increments.append(xi_inc)
        report.iterations_used = n
        if collect_diagnostics and before_prev is not None:
            series = diagnostics.cross_term_series(before_prev, prev, cur, model, cutoff)
            report.cross_integrals.append(float(local.dt * series[:-1].sum()))
            report.budget_integrals.append(
                diagnostics.budget_indicator_integral(before_prev, prev, cutoff))
        if force_n is None and sup_inc + xi_inc <= cfg.tol_picard:
            report.converged = True
            return cur, report
        before_prev = prev
        prev = cur
    report.converged = force_n is not None
    return cur, report


def concatenate_windows(noise: NoiseRealization, cfg: SolverConfig,
                        model: ModelSpec, coeff: CoefficientSpec,
                        measure: LevyMeasureSpec, level: float,
                        u0: GalerkinVector, stop_level: float | None = None):
    """Patch local fixed-point windows across the horizon.

    Each window runs until its dissipation budget is spent at a grid time
    (or the window cap), then restarts from the attained state.  Returns
    (path, stop_times, reports, crossing_index); ``crossing_index`` is the
    first global grid index where the H norm reached ``stop_level``, with
    everything after it discarded.
    """
    cutoff = Cutoff(level=level, budget=cfg.budget)
    total = noise.n_steps
    dim = model.basis.dim
    budget_sq = cfg.budget * cfg.budget

    if stop_level is not None and h_norm(u0) >= stop_level:
        path = PathSegment.from_states(model.basis, noise.t0, noise.dt,
                                       np.asarray(u0, dtype=float).reshape(1, dim))
        return path, [], [], 0

    all_states = [np.asarray(u0, dtype=float).reshape(1, dim)]
    stop_times = []
    reports = []
    xi_total = 0.0
    s = 0
    state = np.asarray(u0, dtype=float)
    while s < total:
        w_try = min(cfg.window_steps, total - s)
        path = report = None
        for _ in range(5):
            path, report = picard_local(noise, cfg, model, coeff, measure,
                                        cutoff, state, start_step=s, n_steps=w_try)
            if report.converged:
                break
            w_try = max(1, w_try // 2)
        if not report.converged:
            raise PicardDivergenceError(
                f"window at step {s} failed to contract even at {w_try} steps")
        trig = np.flatnonzero(path.xi_sq[1:] >= budget_sq)
        cut = int(trig[0]) + 1 if trig.size else path.n_steps
        kept = path.states[1:cut + 1]
        if stop_level is not None:
            norms = np.sqrt((kept * kept).sum(axis=1))
            hit = np.flatnonzero(norms >= stop_level)
            if hit.size:
                idx = int(hit[0])
                all_states.append(kept[:idx + 1])
                full = np.vstack(all_states)
                part = PathSegment.from_states(model.basis, noise.t0, noise.dt, full)
                return part, stop_times, reports, s + idx + 1
        all_states.append(kept)
        reports.append(report)
        s += cut
        stop_times.append(noise.t0 + s * noise.dt)
        xi_total += float(path.xi_sq[cut])
        if xi_total > cfg.budget_ceiling:
            raise BlowupError(
                "dissipation integral passed the ceiling "
                f"({xi_total:.3g} > {cfg.budget_ceiling:.3g}); "
                "treating the path as blown up")
        state = path.states[cut]
    full = np.vstack(all_states)
    return (PathSegment.from_states(model.basis, noise.t0, noise.dt, full),
            stop_times, reports, None)


def global_solve(noise: NoiseRealization, cfg: SolverConfig, model: ModelSpec,
                 coeff: CoefficientSpec, measure: LevyMeasureSpec,
                 u0: GalerkinVector) -> SolveOutcome:
    """Escalate the cutoff level until the path never reaches it."""
    level = cfg.level
    last = None
    for attempt in range(cfg.max_levels):
        path, stops, reports, crossing = concatenate_windows(
            noise, cfg, model, coeff, measure, level, u0, stop_level=level)
        last = (path, stops, reports)
        if crossing is None:
            return SolveOutcome(trajectory=path, stop_times=stops,
                                level_final=level, blowup_flag=False,
                                seed=noise.seed, window_reports=reports)
        if attempt < cfg.max_levels - 1:
            level = level * cfg.level_growth
    path, stops, reports = last
    return SolveOutcome(trajectory=path, stop_times=stops, level_final=level,
                        blowup_flag=True, seed=noise.seed, window_reports=reports)


def strong_order_study(cfg: SolverConfig, model: ModelSpec, coeff: CoefficientSpec,
                       measure: LevyMeasureSpec, wiener, u0: GalerkinVector,
                       n_paths: int, base_seed: int, ref_factor: int = 8):
    """Measured strong self-convergence order of the direct scheme.

    Per path one fine realization drives runs at dt and dt/2 (increments
    aggregated onto the coarser grids) against the dt/ref_factor reference;
    the order is log2 of the ratio of mean sup errors on the coarse grid.
    """
    from dataclasses import replace

    from .noise import path_seeds, sample_realization

    dt = cfg.dt
    n = cfg.n_steps
    errs1 = []
    errs2 = []
    seeds = path_seeds(base_seed, n_paths)
    for s in seeds:
        fine = sample_realization(0.0, n * ref_factor, dt / ref_factor,
                                  measure, wiener, int(s))
        ref = baseline_direct(fine, replace(cfg, dt=dt / ref_factor),
                              model, coeff, measure, u0)
        u_c = baseline_direct(fine.coarsen(ref_factor), cfg, model, coeff,
                              measure, u0)
        u_h = baseline_direct(fine.coarsen(ref_factor // 2),
                              replace(cfg, dt=dt / 2), model, coeff, measure, u0)
        ref_on_coarse = ref.states[::ref_factor]
        errs1.append(float(np.sqrt(((u_c.states - ref_on_coarse) ** 2).sum(axis=1)).max()))
        errs2.append(float(np.sqrt(((u_h.states[::2] - ref_on_coarse) ** 2).sum(axis=1)).max()))
    e1 = float(np.mean(errs1))
    e2 = float(np.mean(errs2))
    order = float(np.log2(e1 / e2)) if e2 > 0 else np.inf
    return order, e1, e2


def baseline_direct(noise: NoiseRealization, cfg: SolverConfig, model: ModelSpec,
                    coeff: CoefficientSpec, measure: LevyMeasureSpec,
                    u0: GalerkinVector, level: float | None = None) -> PathSegment:
    """Direct semi-implicit scheme with convection at the current state."""
    basis = model.basis
    cutoff = Cutoff(level=level, budget=None)
    factors = step_factors(model, noise.dt, cfg.stepper)
    n = noise.n_steps
    states = np.empty((n + 1, basis.dim))
    states[0] = np.asarray(u0, dtype=float)
    f = coeff.f_at(noise.t0)
    for k in range(n):
        t = noise.t0 + k * noise.dt
        states[k + 1] = linear_step(
            states[k], states[k], 0.0, t, noise.dt, model, coeff, measure,
            cutoff, f, noise.wiener[k], noise.marks_in_step(k), factors)
    return PathSegment.from_states(basis, noise.t0, noise.dt, states)
