"""Numerical verification of the energy identity and iteration estimates.

Everything here is post-processing over immutable paths: a per-step energy
ledger whose terms must reproduce the squared-norm increments up to a
recorded residual, the Gronwall moment bound as a Monte Carlo check, the
budget-capped quantities of the iteration analysis, and contraction
reports aggregated over path ensembles.  Expectations are sample means
with reported standard errors; pass/fail margins are 3 standard errors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cutoffs import Cutoff
from .models import ModelSpec
from .noise import (CoefficientSpec, LevyMeasureSpec, NoiseRealization,
                    compensator_drift, jump_coefficient, psi_hs_norm_sq,
                    wiener_apply)
from .spaces import PathSegment, SpectralBasis, dual_norm, v_norm_sq_rows


# ---------------------------------------------------------------------------
# pathwise energy ledger


@dataclass(frozen=True)
class EnergyLedger:
    """Per-step account of the squared-H-norm balance along one path."""

    dissipation: np.ndarray    # 2 dt ||y_k||^2
    forcing: np.ndarray        # 2 dt <f_k, y_k>
    wiener_mart: np.ndarray    # 2 <Psi dW, y_k>
    jump_mart: np.ndarray      # compensated pairing term
    jump_quad: np.ndarray      # sum |G|^2 over realized jumps
    wiener_quad: np.ndarray    # dt ||Psi||_HS^2
    residual: np.ndarray

    @property
    def residual_net(self) -> float:
        """Signed total of unaccounted energy (martingale parts cancel)."""
        return float(self.residual.sum())

    @property
    def residual_abs(self) -> float:
        return float(np.abs(self.residual).sum())


def energy_ledger(path: PathSegment, noise: NoiseRealization, model: ModelSpec,
                  coeff: CoefficientSpec, measure: LevyMeasureSpec) -> EnergyLedger:
    """Recompute every energy term from the stored path and its noise.

    The convection term never appears: its pairing against the state is
    exactly zero by skew-symmetry, so any roundoff it leaves lands in the
    residual.
    """
    if path.n_steps != noise.n_steps:
        raise ValueError("path and noise grids differ")
    k_steps = path.n_steps
    dt = path.dt
    lam = model.basis.eigenvalues
    dis = np.empty(k_steps)
    forc = np.empty(k_steps)
    wmart = np.empty(k_steps)
    jmart = np.empty(k_steps)
    jquad = np.empty(k_steps)
    wquad = np.empty(k_steps)
    res = np.empty(k_steps)
    for k in range(k_steps):
        t = path.t0 + k * dt
        y = path.states[k]
        y1 = path.states[k + 1]
        f = coeff.f_at(t)
        dis[k] = 2.0 * dt * float(np.dot(lam, y * y))
        forc[k] = 2.0 * dt * float(np.dot(f, y))
        dw = noise.wiener[k]
        wmart[k] = 2.0 * float(np.dot(wiener_apply(coeff, t, y, dw), y)) if dw.size else 0.0
        marks = noise.marks_in_step(k)
        pair = 0.0
        quad = 0.0
        for z in marks:
            g = jump_coefficient(coeff, t, y, float(z))
            pair += float(np.dot(g, y))
            quad += float(np.dot(g, g))
        comp = compensator_drift(coeff, t, y, measure)
        jmart[k] = 2.0 * (pair - dt * float(np.dot(comp, y)))
        jquad[k] = quad
        wquad[k] = dt * psi_hs_norm_sq(coeff, t, y)
        gain = float(np.dot(y1, y1) - np.dot(y, y))
        res[k] = gain - (-dis[k] + forc[k] + wmart[k] + jmart[k] + jquad[k] + wquad[k])
    return EnergyLedger(dis, forc, wmart, jmart, jquad, wquad, res)


# ---------------------------------------------------------------------------
# Gronwall moment bound


@dataclass(frozen=True)
class AprioriReport:
    n_paths: int
    sup_mean_h_sq: float       # sup over grid of the sample mean of |u|^2
    mean_xi_sq: float          # sample mean of int ||u||^2
    se_sup: float
    se_xi: float
    bound_sup: float
    bound_xi: float

    @property
    def ok_sup(self) -> bool:
        return self.sup_mean_h_sq <= self.bound_sup + 3.0 * self.se_sup

    @property
    def ok_xi(self) -> bool:
        return self.mean_xi_sq <= self.bound_xi + 3.0 * self.se_xi

    @property
    def ok(self) -> bool:
        return self.ok_sup and self.ok_xi


def gronwall_bounds(coeff: CoefficientSpec, basis: SpectralBasis,
                    u0_h_sq: float, horizon: float) -> tuple[float, float]:
    """Moment bounds implied by the growth constants.

    With margin eps = (2 - L5)/2 the energy balance gives

        E|u(t)|^2 <= (E|u0|^2 + 2/(2-L5) F + L3 t) exp(L4 t) =: B(t),
        (2-L5)/2 E int ||u||^2 <= E|u0|^2 + 2/(2-L5) F + L3 T + L4 T B(T),

    with F the time integral of the squared dual norm of the forcing.
    """
    l3, l4, l5 = coeff.l3, coeff.l4, coeff.l5
    f_int = horizon * dual_norm(coeff.forcing, basis) ** 2
    base = u0_h_sq + 2.0 / (2.0 - l5) * f_int + l3 * horizon
    bound_sup = base * np.exp(l4 * horizon)
    bound_xi = 2.0 / (2.0 - l5) * (base + l4 * horizon * bound_sup)
    return float(bound_sup), float(bound_xi)


def moment_bound_report(paths: list[PathSegment], coeff: CoefficientSpec,
                        basis: SpectralBasis, u0_h_sq: float,
                        horizon: float) -> AprioriReport:
    m = len(paths)
    if m < 30:
        raise ValueError("need at least 30 paths for a meaningful check")
    h_sq = np.stack([np.einsum("ij,ij->i", p.states, p.states) for p in paths])
    mean_t = h_sq.mean(axis=0)
    k_star = int(np.argmax(mean_t))
    se_sup = float(h_sq[:, k_star].std(ddof=1) / np.sqrt(m))
    xi_fin = np.array([p.xi_sq[-1] for p in paths])
    bound_sup, bound_xi = gronwall_bounds(coeff, basis, u0_h_sq, horizon)
    return AprioriReport(
        n_paths=m,
        sup_mean_h_sq=float(mean_t[k_star]),
        mean_xi_sq=float(xi_fin.mean()),
        se_sup=se_sup,
        se_xi=float(xi_fin.std(ddof=1) / np.sqrt(m)),
        bound_sup=bound_sup,
        bound_xi=bound_xi,
    )


# ---------------------------------------------------------------------------
# budget-capped quantities of the iteration analysis


def _capped_energy_rows(path: PathSegment, cutoff: Cutoff, basis) -> np.ndarray:
    """||y(t_k)||^2 while the dissipation norm is still within 3x budget."""
    vsq = v_norm_sq_rows(path.states, basis)
    inside = np.sqrt(path.xi_sq) <= 3.0 * cutoff.budget
    return vsq * inside


def budget_indicator_integral(prev: PathSegment, cur: PathSegment,
                              cutoff: Cutoff) -> float:
    """Left-Riemann integral of the capped two-iterate energy density."""
    basis = cur.basis
    series = _capped_energy_rows(prev, cutoff, basis) + _capped_energy_rows(cur, cutoff, basis)
    return float(cur.dt * series[:-1].sum())


@dataclass(frozen=True)
class BudgetCapReport:
    integral: float
    bound: float
    overshoot: float

    @property
    def ok(self) -> bool:
        return self.integral <= self.bound


def budget_cap_report(prev: PathSegment, cur: PathSegment,
                      cutoff: Cutoff) -> BudgetCapReport:
    """Check the capped integral against 18 budget^2 plus step overshoot."""
    basis = cur.basis
    integral = budget_indicator_integral(prev, cur, cutoff)
    over = cur.dt * max(float(v_norm_sq_rows(prev.states, basis).max()),
                        float(v_norm_sq_rows(cur.states, basis).max()))
    bound = 18.0 * cutoff.budget ** 2 + 2.0 * over
    return BudgetCapReport(integral=integral, bound=float(bound), overshoot=float(over))


def cross_term_series(prev: PathSegment, cur: PathSegment, nxt: PathSegment,
                      model: ModelSpec, cutoff: Cutoff) -> np.ndarray:
    """Pointwise convection cross term between consecutive iterates.

    At each grid time this pairs the difference of the cutoff convection
    terms of (cur, nxt) and (prev, cur) against the newest increment.
    """
    n = cur.n_steps
    out = np.empty(n + 1)
    for k in range(n + 1):
        test = nxt.states[k] - cur.states[k]
        c1 = cutoff.factor(float(np.linalg.norm(cur.states[k])),
                           float(np.sqrt(cur.xi_sq[k])))
        c0 = cutoff.factor(float(np.linalg.norm(prev.states[k])),
                           float(np.sqrt(prev.xi_sq[k])))
        val = 0.0
        if c1 != 0.0:
            val += c1 * model.trilinear(cur.states[k], nxt.states[k], test)
        if c0 != 0.0:
            val -= c0 * model.trilinear(prev.states[k], cur.states[k], test)
        out[k] = val
    return out


def cross_term_envelope(prev: PathSegment, cur: PathSegment, nxt: PathSegment,
                        model: ModelSpec, cutoff: Cutoff, eps: float,
                        p: float, c_const: float) -> np.ndarray:
    """Upper envelope for the cross term with a calibrated constant.

    Mirrors the a-priori bound structure: V-norm increments of both
    iterate differences, budget-capped energies weighted by the running
    squared increment, and a level/budget-dependent coefficient on the
    newest squared increment.
    """
    basis = cur.basis
    m = cutoff.level if cutoff.level is not None else 0.0
    delta = cutoff.budget
    d0 = cur.states - prev.states
    d1 = nxt.states - cur.states
    d0_h = np.einsum("ij,ij->i", d0, d0)
    d1_h = np.einsum("ij,ij->i", d1, d1)
    d0_v = (d0 * d0) @ basis.eigenvalues
    d1_v = (d1 * d1) @ basis.eigenvalues
    # running squared dissipation norm of the difference, left rule
    d0_xi = np.cumsum(np.concatenate([[0.0], cur.dt * d0_v[:-1]]))
    capped = _capped_energy_rows(prev, cutoff, basis) + _capped_energy_rows(cur, cutoff, basis)
    weight = (1.0 + (m + 2.0) ** 2 + (m + 2.0) ** 2 / delta
              + (m + 1.0) ** 2 * delta ** (-4.0 * p)
              + (m + 1.0) ** 2 * eps ** 3 * delta ** (-4.0 * p)) / eps ** 3
    env = (7.0 * eps * d1_v
           + (2.0 * eps + delta ** (2.0 * p) / np.sqrt(eps)) * d0_v
           + c_const * (eps / delta ** 1.5 + delta ** (2.0 * p - 2.0) / np.sqrt(eps)
                        + eps * delta ** (2.0 * (p - 1.0))) * d0_xi * capped
           + 3.0 * eps * d0_h * capped
           + c_const * weight * capped * d1_h)
    return env


# ---------------------------------------------------------------------------
# contraction of the outer iteration


@dataclass(frozen=True)
class ContractionReport:
    a: np.ndarray          # sqrt(mean int ||y_{n+1}-y_n||^2) per n
    b: np.ndarray          # mean sup |y_{n+1}-y_n| per n
    ratios_a: np.ndarray
    ratios_b: np.ndarray
    partial_sum_a: np.ndarray
    partial_sum_b: np.ndarray


def contraction_report(reports: list) -> ContractionReport:
    """Aggregate per-path iteration increments into ensemble decay rates."""
    if len(reports) < 1:
        raise ValueError("need at least one iteration report")
    n_common = min(len(r.xi_increments) for r in reports)
    xi = np.array([r.xi_increments[:n_common] for r in reports])
    sup = np.array([r.sup_increments[:n_common] for r in reports])
    a = np.sqrt((xi * xi).mean(axis=0))
    b = sup.mean(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios_a = a[1:] / a[:-1]
        ratios_b = b[1:] / b[:-1]
    return ContractionReport(a=a, b=b, ratios_a=ratios_a, ratios_b=ratios_b,
                             partial_sum_a=np.cumsum(a), partial_sum_b=np.cumsum(b))
