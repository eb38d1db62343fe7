"""Jump measures, noise sampling, and the stochastic coefficient families.

Marks are scalar reals; a jump measure is kept finite by construction
(compound Gaussian, or a power law truncated away from 0 and infinity), so
jump times form a Poisson process of rate ``total_mass`` and marks are
i.i.d. from the normalized measure.  The Wiener driver is truncated to
finitely many directions with one increment per grid step.

Coefficient families act linearly through the mark:

* ``additive``   G(t,v,z) = z * sigma        (per mode, state independent)
* ``diagonal``   G(t,v,z) = z * sigma_j v_j
* ``gradient``   G(t,v,z) = z * theta * kappa_j v_j, with kappa_j the
  derivative-order weight sqrt(lambda_j / visc)

and analogously for the Wiener coefficient.  Each family carries certified
Lipschitz/growth constants L1..L5; the weights L2 and L5 multiplying the V
norm must stay strictly below 2 or construction fails, since twice the
dissipation is all the energy balance can absorb.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spaces import SpectralBasis


class GrowthConditionError(ValueError):
    """The V-norm weights L2/L5 left the admissible range [0, 2)."""


# ---------------------------------------------------------------------------
# jump measures


@dataclass(frozen=True)
class LevyMeasureSpec:
    """Finite jump-intensity measure on the real marks, with moments."""

    family: str
    params: tuple
    total_mass: float
    m1: float   # integral of z
    m2: float   # integral of z^2

    def sample_marks(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.family == "compound_gaussian":
            _, mean, sd = self.params
            return rng.normal(mean, sd, size=n)
        if self.family == "truncated_power":
            c, alpha, lo, hi = self.params
            u = rng.random(n)
            mag = (lo ** -alpha - u * (lo ** -alpha - hi ** -alpha)) ** (-1.0 / alpha)
            sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
            return sign * mag
        if self.family == "none":
            return np.zeros(n)
        raise ValueError(f"unknown measure family {self.family!r}")

    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights with integral h dnu ~= sum w_i h(z_i)."""
        if self.family == "compound_gaussian":
            rate, mean, sd = self.params
            x, w = np.polynomial.hermite.hermgauss(64)
            zs = mean + np.sqrt(2.0) * sd * x
            ws = rate * w / np.sqrt(np.pi)
            return zs, ws
        if self.family == "truncated_power":
            c, alpha, lo, hi = self.params
            x, w = np.polynomial.legendre.leggauss(96)
            z = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
            wz = 0.5 * (hi - lo) * w * c * z ** (-1.0 - alpha)
            return np.concatenate([-z[::-1], z]), np.concatenate([wz[::-1], wz])
        if self.family == "none":
            return np.zeros(0), np.zeros(0)
        raise ValueError(f"unknown measure family {self.family!r}")


def compound_gaussian(rate: float, mean: float = 0.0, sd: float = 1.0) -> LevyMeasureSpec:
    if rate < 0 or sd < 0:
        raise ValueError("rate and sd must be nonnegative")
    return LevyMeasureSpec(
        family="compound_gaussian",
        params=(float(rate), float(mean), float(sd)),
        total_mass=float(rate),
        m1=float(rate * mean),
        m2=float(rate * (mean * mean + sd * sd)),
    )


def truncated_power(c: float, alpha: float, eps_low: float, r_max: float) -> LevyMeasureSpec:
    """Symmetric two-sided density c |z|^(-1-alpha) on eps_low <= |z| <= r_max."""
    if not (0.0 < eps_low < r_max):
        raise ValueError("need 0 < eps_low < r_max")
    if c <= 0 or alpha <= 0:
        raise ValueError("c and alpha must be positive")
    mass = 2.0 * c * (eps_low ** -alpha - r_max ** -alpha) / alpha
    if alpha == 2.0:
        m2 = 2.0 * c * np.log(r_max / eps_low)
    else:
        m2 = 2.0 * c * (r_max ** (2.0 - alpha) - eps_low ** (2.0 - alpha)) / (2.0 - alpha)
    return LevyMeasureSpec(
        family="truncated_power",
        params=(float(c), float(alpha), float(eps_low), float(r_max)),
        total_mass=float(mass),
        m1=0.0,
        m2=float(m2),
    )


def no_jumps() -> LevyMeasureSpec:
    return LevyMeasureSpec(family="none", params=(), total_mass=0.0, m1=0.0, m2=0.0)


@dataclass(frozen=True)
class WienerDriverSpec:
    """Number of retained Wiener directions; 0 disables the Wiener part."""

    dims: int = 0

    def __post_init__(self):
        if self.dims < 0:
            raise ValueError("dims must be nonnegative")


# ---------------------------------------------------------------------------
# coefficient families


@dataclass(frozen=True)
class CoefficientFamily:
    kind: str                    # none | additive | diagonal | gradient
    sigma: np.ndarray | None = None
    theta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "additive", "diagonal", "gradient"):
            raise ValueError(f"unknown coefficient family {self.kind!r}")
        if self.kind in ("additive", "diagonal") and self.sigma is None:
            raise ValueError(f"{self.kind} family needs sigma")


def family(kind: str, n_modes: int, sigma=None, theta: float = 0.0) -> CoefficientFamily:
    """Build a family, broadcasting a scalar sigma across all modes."""
    if kind in ("additive", "diagonal"):
        sig = np.asarray(sigma, dtype=float)
        if sig.ndim == 0:
            sig = np.full(n_modes, float(sig))
        if sig.shape != (n_modes,):
            raise ValueError("sigma must be scalar or one value per mode")
        sig = sig.copy()
        sig.setflags(write=False)
        return CoefficientFamily(kind=kind, sigma=sig)
    return CoefficientFamily(kind=kind, theta=float(theta))


@dataclass(frozen=True)
class CoefficientSpec:
    """Jump and Wiener coefficient maps with certified constants."""

    g: CoefficientFamily
    psi: CoefficientFamily
    wavenumbers: np.ndarray       # sqrt(lambda_j / visc)
    wiener_dims: int
    l1: float
    l2: float
    l3: float
    l4: float
    l5: float
    forcing: np.ndarray           # constant dual-coordinate vector

    @property
    def constants(self) -> tuple[float, float, float, float, float]:
        return (self.l1, self.l2, self.l3, self.l4, self.l5)

    def f_at(self, t: float) -> np.ndarray:
        # time is threaded for future inhomogeneous forcing
        return self.forcing


def certify_constants(g: CoefficientFamily, psi: CoefficientFamily,
                      measure: LevyMeasureSpec, basis: SpectralBasis,
                      visc: float, wiener_dims: int) -> tuple[float, ...]:
    """Closed-form Lipschitz/growth constants for the shipped families.

    Raises GrowthConditionError when a V-norm weight reaches 2.
    """
    m2 = measure.m2
    dims = min(wiener_dims, basis.dim)
    l1 = l2 = l3 = l4 = l5 = 0.0

    if g.kind == "additive":
        l3 += m2 * float(np.dot(g.sigma, g.sigma))
    elif g.kind == "diagonal":
        peak = float(np.max(g.sigma * g.sigma)) if g.sigma.size else 0.0
        l1 += m2 * peak
        l4 += m2 * peak
    elif g.kind == "gradient":
        l2 += g.theta * g.theta * m2 / visc
        l5 += g.theta * g.theta * m2 / visc

    if psi.kind == "additive":
        sig = psi.sigma[:dims]
        l3 += float(np.dot(sig, sig))
    elif psi.kind == "diagonal":
        sig = psi.sigma[:dims]
        peak = float(np.max(sig * sig)) if sig.size else 0.0
        l1 += peak
        l4 += peak
    elif psi.kind == "gradient":
        l2 += psi.theta * psi.theta / visc
        l5 += psi.theta * psi.theta / visc

    if l2 >= 2.0 or l5 >= 2.0:
        raise GrowthConditionError(
            "V-norm noise weights must lie in [0, 2): "
            f"got L2={l2:.6g}, L5={l5:.6g}")
    return (l1, l2, l3, l4, l5)


def build_coefficients(g: CoefficientFamily, psi: CoefficientFamily,
                       measure: LevyMeasureSpec, basis: SpectralBasis,
                       visc: float, wiener: WienerDriverSpec = WienerDriverSpec(0),
                       forcing: np.ndarray | None = None) -> CoefficientSpec:
    l1, l2, l3, l4, l5 = certify_constants(g, psi, measure, basis, visc, wiener.dims)
    if forcing is None:
        forcing = np.zeros(basis.dim)
    forcing = np.asarray(forcing, dtype=float).copy()
    if forcing.shape != (basis.dim,):
        raise ValueError("forcing must be one dual coordinate per mode")
    forcing.setflags(write=False)
    kappa = np.sqrt(basis.eigenvalues / visc)
    kappa.setflags(write=False)
    return CoefficientSpec(g=g, psi=psi, wavenumbers=kappa,
                           wiener_dims=min(wiener.dims, basis.dim),
                           l1=l1, l2=l2, l3=l3, l4=l4, l5=l5, forcing=forcing)


def jump_coefficient(coeff: CoefficientSpec, t: float, v: np.ndarray, z: float) -> np.ndarray:
    """G(t, v, z); broadcasts over leading axes of v."""
    fam = coeff.g
    if fam.kind == "none":
        return np.zeros_like(np.asarray(v, dtype=float))
    if fam.kind == "additive":
        return z * fam.sigma * np.ones_like(np.asarray(v, dtype=float))
    if fam.kind == "diagonal":
        return z * fam.sigma * v
    return z * fam.theta * coeff.wavenumbers * v


def wiener_apply(coeff: CoefficientSpec, t: float, v: np.ndarray, dw: np.ndarray) -> np.ndarray:
    """Psi(t, v) applied to an increment vector of length wiener_dims."""
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    d = coeff.wiener_dims
    if d == 0 or coeff.psi.kind == "none":
        return out
    dw = np.asarray(dw, dtype=float)[..., :d]
    if coeff.psi.kind == "additive":
        out[..., :d] = coeff.psi.sigma[:d] * dw
    elif coeff.psi.kind == "diagonal":
        out[..., :d] = coeff.psi.sigma[:d] * v[..., :d] * dw
    else:
        out[..., :d] = coeff.psi.theta * coeff.wavenumbers[:d] * v[..., :d] * dw
    return out


def psi_hs_norm_sq(coeff: CoefficientSpec, t: float, v: np.ndarray) -> float:
    """Squared Hilbert-Schmidt norm of Psi(t, v)."""
    d = coeff.wiener_dims
    if d == 0 or coeff.psi.kind == "none":
        return 0.0
    if coeff.psi.kind == "additive":
        sig = coeff.psi.sigma[:d]
        return float(np.dot(sig, sig))
    if coeff.psi.kind == "diagonal":
        col = coeff.psi.sigma[:d] * np.asarray(v)[:d]
    else:
        col = coeff.psi.theta * coeff.wavenumbers[:d] * np.asarray(v)[:d]
    return float(np.dot(col, col))


def compensator_drift(coeff: CoefficientSpec, t: float, v: np.ndarray,
                      measure: LevyMeasureSpec) -> np.ndarray:
    """integral of G(t, v, z) dnu, the drift making jump sums compensated."""
    if measure.m1 == 0.0:
        return np.zeros_like(np.asarray(v, dtype=float))
    return measure.m1 * jump_coefficient(coeff, t, v, 1.0)


# ---------------------------------------------------------------------------
# empirical certification


@dataclass(frozen=True)
class NoiseConditionReport:
    n_samples: int
    max_ratio_lipschitz: float
    max_ratio_growth: float
    #: allowance for roundoff when a family saturates its constant exactly
    tolerance: float = 1e-9

    @property
    def ok(self) -> bool:
        return (self.max_ratio_lipschitz <= 1.0 + self.tolerance
                and self.max_ratio_growth <= 1.0 + self.tolerance)


def condition_report(coeff: CoefficientSpec, measure: LevyMeasureSpec,
                     basis: SpectralBasis, n_samples: int = 2000,
                     seed: int = 0) -> NoiseConditionReport:
    """Check the declared constants against direct quadrature over the measure.

    For random state pairs the Lipschitz and growth left-hand sides are
    integrated numerically over the jump measure and compared with the
    right-hand sides built from the certified constants; the worst ratio is
    reported.  Single-mode probes (first and last mode) are included since
    they maximize the gradient family.
    """
    lam = basis.eigenvalues
    dim = basis.dim
    rng = np.random.default_rng(seed)
    v1 = rng.standard_normal((n_samples, dim))
    v2 = rng.standard_normal((n_samples, dim))
    probes = np.zeros((4, dim))
    probes[0, 0] = 1.0
    probes[1, -1] = 1.0
    probes[3, -1] = 2.0
    v1 = np.vstack([v1, probes])
    v2 = np.vstack([v2, np.roll(probes, 1, axis=0)])

    zs, ws = measure.quadrature()

    def jump_integral(states_a, states_b=None):
        acc = np.zeros(states_a.shape[0])
        for z, w in zip(zs, ws):
            ga = jump_coefficient(coeff, 0.0, states_a, float(z))
            if states_b is None:
                diff = ga
            else:
                diff = ga - jump_coefficient(coeff, 0.0, states_b, float(z))
            acc += w * np.einsum("ij,ij->i", diff, diff)
        return acc

    def psi_sq(states):
        return np.array([psi_hs_norm_sq(coeff, 0.0, s) for s in states])

    d = v1 - v2
    h_sq = np.einsum("ij,ij->i", d, d)
    v_sq = (d * d) @ lam
    lhs1 = psi_sq_diff(coeff, v1, v2) + jump_integral(v1, v2)
    rhs1 = coeff.l1 * h_sq + coeff.l2 * v_sq
    ratio1 = _safe_ratio(lhs1, rhs1)

    h1_sq = np.einsum("ij,ij->i", v1, v1)
    v1_sq = (v1 * v1) @ lam
    lhs2 = psi_sq(v1) + jump_integral(v1)
    rhs2 = coeff.l3 + coeff.l4 * h1_sq + coeff.l5 * v1_sq
    ratio2 = _safe_ratio(lhs2, rhs2)

    return NoiseConditionReport(
        n_samples=int(v1.shape[0]),
        max_ratio_lipschitz=float(ratio1.max()) if ratio1.size else 0.0,
        max_ratio_growth=float(ratio2.max()) if ratio2.size else 0.0,
    )


def psi_sq_diff(coeff: CoefficientSpec, v1: np.ndarray, v2: np.ndarray) -> np.ndarray:
    """Rowwise ||Psi(v1) - Psi(v2)||_HS^2."""
    d = coeff.wiener_dims
    if d == 0 or coeff.psi.kind in ("none", "additive"):
        return np.zeros(v1.shape[0])
    if coeff.psi.kind == "diagonal":
        col = coeff.psi.sigma[:d] * (v1[:, :d] - v2[:, :d])
    else:
        col = coeff.psi.theta * coeff.wavenumbers[:d] * (v1[:, :d] - v2[:, :d])
    return np.einsum("ij,ij->i", col, col)


def _safe_ratio(lhs, rhs):
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    out = np.zeros_like(lhs)
    pos = lhs > 0
    out[pos] = lhs[pos] / np.where(rhs[pos] > 0, rhs[pos], np.inf)
    return out


# ---------------------------------------------------------------------------
# realizations


@dataclass(frozen=True)
class NoiseRealization:
    """Frozen Wiener increments and jump list on a uniform grid."""

    t0: float
    dt: float
    wiener: np.ndarray        # (n_steps, dims)
    jump_times: np.ndarray    # sorted, strictly inside (t0, t0 + T]
    jump_marks: np.ndarray
    jump_steps: np.ndarray    # step index owning each jump
    seed: int

    def __post_init__(self):
        for arr in (self.wiener, self.jump_times, self.jump_marks, self.jump_steps):
            arr.setflags(write=False)

    @property
    def n_steps(self) -> int:
        return self.wiener.shape[0]

    @property
    def dims(self) -> int:
        return self.wiener.shape[1]

    def marks_in_step(self, k: int) -> np.ndarray:
        lo, hi = np.searchsorted(self.jump_steps, [k, k + 1])
        return self.jump_marks[lo:hi]

    def slice_steps(self, start: int, count: int) -> "NoiseRealization":
        if start < 0 or start + count > self.n_steps:
            raise ValueError("slice outside the realization grid")
        lo, hi = np.searchsorted(self.jump_steps, [start, start + count])
        return NoiseRealization(
            t0=self.t0 + start * self.dt,
            dt=self.dt,
            wiener=self.wiener[start:start + count].copy(),
            jump_times=self.jump_times[lo:hi].copy(),
            jump_marks=self.jump_marks[lo:hi].copy(),
            jump_steps=(self.jump_steps[lo:hi] - start).copy(),
            seed=self.seed,
        )

    def coarsen(self, factor: int) -> "NoiseRealization":
        """Aggregate to a grid coarser by an integer factor (same driving noise)."""
        if self.n_steps % factor != 0:
            raise ValueError("step count must divide by the coarsening factor")
        w = self.wiener.reshape(self.n_steps // factor, factor, self.dims).sum(axis=1)
        return NoiseRealization(
            t0=self.t0,
            dt=self.dt * factor,
            wiener=w,
            jump_times=self.jump_times.copy(),
            jump_marks=self.jump_marks.copy(),
            jump_steps=(self.jump_steps // factor).copy(),
            seed=self.seed,
        )


def sample_realization(t0: float, n_steps: int, dt: float,
                       measure: LevyMeasureSpec, wiener: WienerDriverSpec,
                       seed: int) -> NoiseRealization:
    """Draw one frozen realization; same inputs give a bit-identical result."""
    if not np.isfinite(measure.total_mass):
        raise ValueError("jump measure must have finite total mass")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    horizon = n_steps * dt
    increments = rng.standard_normal((n_steps, wiener.dims)) * np.sqrt(dt)
    n_jumps = int(rng.poisson(measure.total_mass * horizon))
    times = t0 + horizon * (1.0 - rng.random(n_jumps))
    order = np.argsort(times, kind="stable")
    times = times[order]
    marks = measure.sample_marks(rng, n_jumps)[order]
    steps = np.minimum(np.ceil((times - t0) / dt).astype(int) - 1, n_steps - 1)
    steps = np.maximum(steps, 0)
    return NoiseRealization(t0=float(t0), dt=float(dt), wiener=increments,
                            jump_times=times, jump_marks=marks,
                            jump_steps=steps, seed=int(seed))


def path_seeds(base_seed: int, n_paths: int) -> np.ndarray:
    """Independent per-path seeds derived from one base seed."""
    return np.random.SeedSequence(base_seed).generate_state(n_paths, np.uint64)


# ---------------------------------------------------------------------------
# textual export for replay


def write_noise_csv(real: NoiseRealization, fh) -> None:
    own = isinstance(fh, (str,))
    f = open(fh, "w") if own else fh
    try:
        f.write("# levyflow-noise-v1\n")
        f.write(f"meta,{real.t0:.17g},{real.dt:.17g},{real.n_steps},{real.dims},{real.seed}\n")
        for k in range(real.n_steps):
            row = ",".join(f"{x:.17g}" for x in real.wiener[k])
            f.write(f"W,{k}" + ("," + row if row else "") + "\n")
        for t, z, s in zip(real.jump_times, real.jump_marks, real.jump_steps):
            f.write(f"J,{t:.17g},{z:.17g},{s}\n")
    finally:
        if own:
            f.close()


def read_noise_csv(fh) -> NoiseRealization:
    own = isinstance(fh, (str,))
    f = open(fh, "r") if own else fh
    try:
        header = f.readline().strip()
        if header != "# levyflow-noise-v1":
            raise ValueError("not a noise export file")
        meta = f.readline().strip().split(",")
        t0, dt = float(meta[1]), float(meta[2])
        n_steps, dims, seed = int(meta[3]), int(meta[4]), int(meta[5])
        wiener = np.zeros((n_steps, dims))
        times, marks, steps = [], [], []
        for line in f:
            parts = line.strip().split(",")
            if parts[0] == "W":
                k = int(parts[1])
                if dims:
                    wiener[k] = [float(x) for x in parts[2:]]
            elif parts[0] == "J":
                times.append(float(parts[1]))
                marks.append(float(parts[2]))
                steps.append(int(parts[3]))
        return NoiseRealization(t0=t0, dt=dt, wiener=wiener,
                                jump_times=np.array(times), jump_marks=np.array(marks),
                                jump_steps=np.array(steps, dtype=int), seed=seed)
    finally:
        if own:
            f.close()
