"""Increment samplers and path simulation for the supported process families.

Increments are drawn exactly wherever a closed-form route exists: stable laws
through the Chambers-Mallows-Stuck transform in d = 1 and through Gaussian
subordination in d >= 2, relativistic laws through an exponentially tilted
subordinator, compound Poisson by thinning the atom table.  Everything else
goes through the jump-cutoff route: exact jumps above a cutoff radius, small
jumps dropped against a compensating drift or replaced by a variance-matched
Gaussian, with the discarded variance reported on the plan object.

State-dependent families step a frozen-coefficient Euler scheme that
re-reads the coefficients at the current state before each increment.

All randomness flows through SeedPolicy.  Replicates are split into
fixed-size batches whose streams depend only on the batch index, and
reductions always run in batch order, so results are bit-identical for any
worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DomainError
from .expressions import as_coefficient
from .measures import (
    Atoms,
    Density,
    IsotropicPower,
    Pushforward,
    _mass_profile,
    _rays,
    c_alpha,
    fractional_moment,
    is_symmetric,
    spec_dim,
    surface_area,
    tail_mass,
)
from .symbols import LevyTriplet
from ._quad import shell_integral

__all__ = [
    "DEFAULT_SEED",
    "SeedPolicy",
    "MCEstimate",
    "LevyModel",
    "CompoundPoissonModel",
    "StableLikeModel",
    "RelativisticModel",
    "SDEModel",
    "JumpCutoff",
    "plan_jump_cutoff",
    "sample_levy_increment",
    "PathSample",
    "simulate_path",
    "PathBatch",
    "path_statistics",
    "endpoint_sample",
    "empirical_hitting_rate",
]

DEFAULT_SEED = 0x4C455659


# ---------------------------------------------------------------------------
# seed policy and batched execution


@dataclass(frozen=True)
class SeedPolicy:
    """Deterministic stream derivation from a master seed.

    stream(*indices) builds a Philox generator keyed by the entropy tuple
    (master, *indices).  Replicate sets are split into batches of
    batch_size draws; batch i of a context uses stream(*ctx, i) no matter
    which worker runs it, and reductions concatenate in batch order.
    """

    master: int = DEFAULT_SEED
    batch_size: int = 8192

    def __post_init__(self):
        if not 0 <= int(self.master) < 2 ** 64:
            raise ContractError("master seed must fit in 64 unsigned bits")
        if self.batch_size < 1:
            raise ContractError("batch size must be positive")

    def stream(self, *indices) -> np.random.Generator:
        seq = np.random.SeedSequence((int(self.master),) + tuple(int(i) for i in indices))
        return np.random.Generator(np.random.Philox(seq))

    def batches(self, n: int):
        """(batch index, size) pairs covering n replicates."""
        b = self.batch_size
        return [(i, min(b, n - i * b)) for i in range((n + b - 1) // b)]


def _batched(policy: SeedPolicy, ctx, n, draw, workers=1):
    # draw(rng, size) -> array with leading axis = size; concatenation is in
    # batch-index order so the worker count never touches the output bytes
    jobs = policy.batches(int(n))

    def run(job):
        i, size = job
        return draw(policy.stream(*ctx, i), size)

    if workers <= 1 or len(jobs) == 1:
        parts = [run(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            parts = list(pool.map(run, jobs))
    return np.concatenate(parts, axis=0)


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo estimate: mean, stderr = sample std / sqrt(n), and n."""

    mean: float
    stderr: float
    n: int


# ---------------------------------------------------------------------------
# process models


class LevyModel:
    """Levy process given by its constant triplet; increments are stationary."""

    def __init__(self, triplet: LevyTriplet):
        if not isinstance(triplet, LevyTriplet):
            raise ContractError("LevyModel wraps a constant triplet")
        self.triplet = triplet
        self.d = triplet.d
        self._gauss = _gauss_factor(triplet.Q)


class CompoundPoissonModel:
    """Finite-activity jumps from an atom table plus a linear drift.

    The drift here is the actual slope of the path between jumps; no
    compensator bookkeeping is applied.
    """

    def __init__(self, jumps: Atoms, drift=None):
        if not isinstance(jumps, Atoms):
            raise ContractError("compound Poisson jumps must be an atom table")
        self.jumps = jumps
        self.d = jumps.d
        self.drift = (
            np.zeros(self.d)
            if drift is None
            else np.atleast_1d(np.asarray(drift, dtype=float))
        )
        if self.drift.shape != (self.d,):
            raise ContractError("drift dimension disagrees with the atom table")
        self.rate = float(np.sum(jumps.weights))


def _probe_states(d, low=-10.0, high=10.0, count=41):
    xs = np.linspace(low, high, count)
    if d == 1:
        return xs.reshape(-1, 1)
    pts = [np.zeros(d)]
    for j in range(d):
        for v in xs:
            e = np.zeros(d)
            e[j] = v
            pts.append(e)
    return np.asarray(pts)


class StableLikeModel:
    """Jump order gamma(x); one Euler step draws h^(1/gamma(X)) times a
    standard symmetric gamma(X)-stable vector.

    The order must stay inside (0, 2) on the probe grid; both endpoints
    break the scaling the scheme relies on.
    """

    def __init__(self, gamma, d: int = 1, probe_states=None):
        self.d = int(d)
        self.gamma = as_coefficient(gamma, self.d)
        states = _probe_states(self.d) if probe_states is None else np.atleast_2d(probe_states)
        vals = _coeff_batch(self.gamma, states)
        if not (vals.min() > 0.0 and vals.max() < 2.0):
            raise ContractError(
                "stable-like order must stay inside (0, 2) on the probe grid: "
                f"range [{vals.min():.4g}, {vals.max():.4g}]"
            )


class RelativisticModel:
    """Relativistic stable-like process: order gamma(x), mass m(x) > 0."""

    def __init__(self, gamma, m, d: int = 1, probe_states=None):
        self.d = int(d)
        self.gamma = as_coefficient(gamma, self.d)
        self.m = as_coefficient(m, self.d)
        states = _probe_states(self.d) if probe_states is None else np.atleast_2d(probe_states)
        g = _coeff_batch(self.gamma, states)
        mm = _coeff_batch(self.m, states)
        if not (g.min() > 0.0 and g.max() < 2.0):
            raise ContractError(
                "relativistic order must stay inside (0, 2) on the probe grid: "
                f"range [{g.min():.4g}, {g.max():.4g}]"
            )
        if not mm.min() > 0.0:
            raise ContractError("relativistic mass must stay positive on the probe grid")


class SDEModel:
    """dX = sigma(X-) dL with a Levy (or compound Poisson) driver.

    sigma is a constant (d, k) matrix or a callable taking a length-d state
    vector and returning a (d, k) matrix.  Callable coefficients must come
    with an explicit d and declared bound and Lipschitz constants; the
    constants are contracts stated by the caller, not estimated here.
    """

    def __init__(self, sigma, driver, d=None, sigma_bound=None, sigma_lipschitz=None):
        if not isinstance(driver, (LevyModel, CompoundPoissonModel)):
            raise ContractError("SDE driver must be a Levy or compound Poisson model")
        self.driver = driver
        self.k = driver.d
        if callable(sigma):
            if d is None:
                raise ContractError("state-dependent sigma needs an explicit dimension d")
            if sigma_bound is None or sigma_lipschitz is None:
                raise ContractError(
                    "state-dependent sigma needs declared bound and Lipschitz constants"
                )
            self.sigma = sigma
            self.d = int(d)
            probe = np.atleast_2d(np.asarray(sigma(np.zeros(self.d)), dtype=float))
            if probe.shape != (self.d, self.k):
                raise ContractError(
                    f"sigma(x) must return a ({self.d}, {self.k}) matrix, got {probe.shape}"
                )
        else:
            m = np.atleast_2d(np.asarray(sigma, dtype=float))
            if m.shape[1] != self.k:
                raise ContractError(
                    f"sigma has {m.shape[1]} columns, driver dimension is {self.k}"
                )
            self.sigma = m
            self.d = m.shape[0]
        self.sigma_bound = sigma_bound
        self.sigma_lipschitz = sigma_lipschitz


def _coeff_batch(fn, states):
    """Evaluate a coefficient on an (n, d) state batch.

    Batch-aware callables get the whole array (flattened to (n,) when
    d = 1); scalar-only callables fall back to a per-row loop.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    x = states[:, 0] if states.shape[1] == 1 else states
    try:
        out = np.asarray(fn(x), dtype=float)
    except Exception:
        out = None
    if out is not None:
        if out.shape == (len(states),):
            return out
        if out.ndim == 0:
            return np.full(len(states), float(out))
    if states.shape[1] == 1:
        return np.array([float(fn(float(s[0]))) for s in states])
    return np.array([float(fn(s)) for s in states])


# ---------------------------------------------------------------------------
# elementary stable draws


def _positive_stable(rng, beta, size):
    """Standard positive beta-stable draw, Laplace transform exp(-u^beta).

    Kanter's representation; beta may be an array over the sample.
    """
    b = np.asarray(beta, dtype=float)
    if np.any(b <= 0.0) or np.any(b >= 1.0):
        raise DomainError("positive-stable order must lie in (0, 1)")
    theta = rng.uniform(0.0, math.pi, size)
    w = rng.standard_exponential(size)
    amp = (np.sin(b * theta) ** b * np.sin((1.0 - b) * theta) ** (1.0 - b)
           / np.sin(theta)) ** (1.0 / (1.0 - b))
    return (amp / w) ** ((1.0 - b) / b)


def _standard_symmetric_stable(rng, alpha, size, d=1):
    """Standard symmetric alpha-stable draw with cf exp(-|xi|^alpha).

    d = 1 uses the Chambers-Mallows-Stuck transform; d >= 2 subordinates a
    Brownian draw by a positive (alpha/2)-stable time, exact in law.
    alpha may be an array broadcast over the sample.
    """
    a = np.asarray(alpha, dtype=float)
    if np.any(a <= 0.0) or np.any(a > 2.0):
        raise DomainError("stable order must lie in (0, 2]")
    if d == 1:
        phi = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size)
        w = rng.standard_exponential(size)
        return ((np.cos((1.0 - a) * phi) / w) ** (1.0 / a - 1.0)
                * np.sin(a * phi) / np.cos(phi) ** (1.0 / a))
    a = np.broadcast_to(a, (size,))
    tau = np.ones(size)
    frac = a < 2.0
    if frac.any():
        tau[frac] = _positive_stable(rng, 0.5 * a[frac], int(frac.sum()))
    z = rng.standard_normal((size, d))
    return np.sqrt(2.0 * tau)[:, None] * z


def _relativistic_increment(rng, gamma, m, t, size, d):
    """(size, d) draw from exp(-t[(|xi|^2 + m^2)^(g/2) - m^g]).

    Gaussian subordination by the tilted (g/2)-stable subordinator: draw the
    plain subordinator, accept with probability exp(-m^2 S).  Acceptance
    averages exp(-t m^g) per draw, near 1 for the small steps this is used
    with; t m^g large makes the rejection loop impractical and errors out.
    """
    g = np.broadcast_to(np.asarray(gamma, dtype=float), (size,))
    mm = np.broadcast_to(np.asarray(m, dtype=float), (size,))
    tt = np.broadcast_to(np.asarray(t, dtype=float), (size,))
    tau = np.empty(size)
    pending = np.arange(size)
    for _ in range(10_000):
        if pending.size == 0:
            break
        k = pending.size
        s = tt[pending] ** (2.0 / g[pending]) * _positive_stable(
            rng, 0.5 * g[pending], k
        )
        keep = rng.random(k) < np.exp(-(mm[pending] ** 2) * s)
        tau[pending[keep]] = s[keep]
        pending = pending[~keep]
    if pending.size:
        raise DomainError(
            "tilted subordinator rejection stalled: t * m^gamma is too large "
            "for this route"
        )
    z = rng.standard_normal((size, d))
    return np.sqrt(2.0 * tau)[:, None] * z


def _gauss_factor(Q):
    """Matrix L with L L^T = Q, or None when Q = 0."""
    if Q is None or not np.any(Q):
        return None
    vals, vecs = np.linalg.eigh(Q)
    vals = np.clip(vals, 0.0, None)
    return vecs * np.sqrt(vals)


# ---------------------------------------------------------------------------
# jump-cutoff plans


@dataclass
class JumpCutoff:
    """Finite-activity approximation of a jump spec above a cutoff radius.

    rate is nu(|y| > eps); drift is the correction added to b (minus the
    compensator mass between eps and 1); discarded_variance is the
    per-unit-time second moment of the dropped small jumps (their trace).
    With small_jumps="gaussian" that variance is re-injected as an isotropic
    Gaussian instead of being lost, and gaussian_std is its per-axis
    unit-time standard deviation.
    """

    eps: float
    rate: float
    drift: np.ndarray
    discarded_variance: float
    small_jumps: str
    gaussian_std: float
    sampler: object = field(repr=False)
    d: int = 1


def _uniform_directions(rng, k, d):
    if d == 1:
        return np.where(rng.random(k) < 0.5, -1.0, 1.0).reshape(-1, 1)
    z = rng.standard_normal((k, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _power_jump_sampler(spec: IsotropicPower, eps):
    a = spec.alpha
    r_hi = spec.r_max
    lo_pow = eps ** -a
    hi_pow = 0.0 if math.isinf(r_hi) else r_hi ** -a

    def draw(rng, k):
        u = rng.random(k)
        r = (lo_pow - u * (lo_pow - hi_pow)) ** (-1.0 / a)
        return r[:, None] * _uniform_directions(rng, k, spec.d)

    return draw


def _radial_table(intensity, lo, hi, nodes=4096):
    # cumulative mass table in log radius; only the normalized quantile
    # function is used, counts come from the exact tail quadrature
    u = np.linspace(math.log(lo), math.log(hi), nodes)
    r = np.exp(u)
    g = np.asarray(intensity(r), dtype=float) * r
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(u))])
    if cum[-1] <= 0:
        raise ContractError("jump spec carries no mass above the cutoff")
    return u, cum / cum[-1]


def _tail_horizon(spec, eps, rate):
    if not math.isinf(spec.r_max):
        return spec.r_max
    hi = max(1.0, 10.0 * eps)
    for _ in range(60):
        if tail_mass(spec, hi).value < 1e-9 * rate:
            return hi
        hi *= 2.0
    raise ContractError("jump tail decays too slowly to truncate for sampling")


def _density_jump_sampler(spec: Density, eps, rate):
    hi = _tail_horizon(spec, eps, rate)
    if spec.d == 1:
        rays = _rays(spec)
        masses = [
            shell_integral(ray.intensity, eps, min(hi, ray.r_max), nonnegative=True).value
            for ray in rays
        ]
        total = sum(masses)
        tables = [
            _radial_table(ray.intensity, eps, min(hi, ray.r_max)) if m > 0 else None
            for ray, m in zip(rays, masses)
        ]
        signs = [float(ray.direction[0]) for ray in rays]
        p_pos = masses[0] / total

        def draw(rng, k):
            pick = rng.random(k) < p_pos
            r = np.empty(k)
            for which, tab, sgn in ((pick, tables[0], signs[0]), (~pick, tables[1], signs[1])):
                kk = int(which.sum())
                if kk == 0:
                    continue
                if tab is None:
                    raise ContractError("sampler picked a massless ray")
                u_grid, cdf = tab
                r[which] = sgn * np.exp(np.interp(rng.random(kk), cdf, u_grid))
            return r.reshape(-1, 1)

        return draw

    profile, r_max, _ = _mass_profile(spec)
    u_grid, cdf = _radial_table(profile, eps, min(hi, r_max))

    def draw(rng, k):
        r = np.exp(np.interp(rng.random(k), cdf, u_grid))
        return r[:, None] * _uniform_directions(rng, k, spec.d)

    return draw


def _small_moment(spec, eps):
    return fractional_moment(spec, 2.0, ("ball", eps)).value


def _drift_correction(spec, eps):
    """minus the compensator mass on eps < |y| < 1, always finite."""
    d = spec_dim(spec)
    if eps >= 1.0 or is_symmetric(spec):
        return np.zeros(d)
    total = np.zeros(d)
    for ray in _rays(spec):
        hi = min(1.0, ray.r_max)
        if hi <= eps:
            continue
        res = shell_integral(
            lambda r, _f=ray.intensity: _f(r) * r, eps, hi, nonnegative=True
        )
        total = total + ray.direction * res.value
    return -total


def plan_jump_cutoff(spec, eps=None, target_variance=1e-4, small_jumps="drop"):
    """Build the finite-activity sampling plan for a jump spec.

    The default cutoff is the largest radius whose discarded small-jump
    variance stays below target_variance per unit time.  Atom tables are
    finite activity already and get an exact plan with eps = 0.
    """
    if small_jumps not in ("drop", "gaussian"):
        raise ContractError("small-jump handling is either 'drop' or 'gaussian'")
    if isinstance(spec, Pushforward):
        raise ContractError(
            "jump-cutoff sampling does not support pushforward specs; "
            "approximate the base measure and map the samples"
        )
    d = spec_dim(spec)
    if isinstance(spec, Atoms):
        below = np.linalg.norm(spec.locations, axis=1) < 1.0
        drift = -(spec.weights[below] @ spec.locations[below])
        rate = float(np.sum(spec.weights))
        locs, w = spec.locations, spec.weights / rate

        def draw(rng, k):
            return locs[rng.choice(len(w), size=k, p=w)]

        return JumpCutoff(0.0, rate, np.atleast_1d(drift), 0.0, small_jumps, 0.0, draw, d)

    if eps is None:
        if isinstance(spec, IsotropicPower):
            # closed form: int_{|y|<eps} |y|^2 nu = c S_d eps^(2-a) / (2-a)
            a = spec.alpha
            eps = (target_variance * (2.0 - a) / (spec.c * surface_area(d))) ** (
                1.0 / (2.0 - a)
            )
            eps = min(eps, spec.r_max, 1.0)
        else:
            lo, hi = 1e-12, min(1.0, spec.r_max)
            if _small_moment(spec, hi) <= target_variance:
                eps = hi
            else:
                for _ in range(60):
                    mid = math.sqrt(lo * hi)
                    if _small_moment(spec, mid) > target_variance:
                        hi = mid
                    else:
                        lo = mid
                eps = lo
    if not 0.0 < eps:
        raise DomainError("cutoff radius must be positive")

    rate = tail_mass(spec, eps).value
    if not rate > 0:
        raise ContractError("jump spec carries no mass above the cutoff")
    var = _small_moment(spec, eps)
    drift = _drift_correction(spec, eps)
    if isinstance(spec, IsotropicPower):
        sampler = _power_jump_sampler(spec, eps)
    elif isinstance(spec, Density):
        sampler = _density_jump_sampler(spec, eps, rate)
    else:
        raise ContractError(f"no jump sampler for {type(spec).__name__}")
    g_std = math.sqrt(var / d) if small_jumps == "gaussian" else 0.0
    return JumpCutoff(float(eps), rate, drift, var, small_jumps, g_std, sampler, d)


# ---------------------------------------------------------------------------
# increment sampling


def _poisson_scatter(rng, rate, t, size, sampler, d):
    """Sum of Poisson(rate*t) jumps per replicate, jumps drawn by sampler."""
    counts = rng.poisson(rate * t, size)
    out = np.zeros((size, d))
    total = int(counts.sum())
    if total:
        jumps = sampler(rng, total)
        owners = np.repeat(np.arange(size), counts)
        np.add.at(out, owners, jumps)
    return out


def _exact_stable_scale(spec: IsotropicPower, t):
    # psi = (c / c_alpha) |xi|^alpha, so X_t is t^(1/alpha)-scaled standard
    ratio = spec.c / c_alpha(spec.alpha, spec.d)
    return (t * ratio) ** (1.0 / spec.alpha)


def _resolve_levy_draw(model, t, method="auto", plan=None, small_jumps="drop"):
    """Build draw(rng, size) -> (size, d) increments of X_t for a Levy model."""
    if isinstance(model, CompoundPoissonModel):
        atoms, rate, drift, d = model.jumps, model.rate, model.drift, model.d
        locs, w = atoms.locations, atoms.weights / rate

        def draw(rng, size):
            out = _poisson_scatter(
                rng, rate, t, size, lambda r, k: locs[r.choice(len(w), size=k, p=w)], d
            )
            return out + t * drift

        return draw

    trip = model.triplet
    d = model.d
    gauss = model._gauss
    spec = trip.measure
    root_t = math.sqrt(t)

    base = None
    drift = trip.b.copy()
    extra_std = 0.0
    if spec is None:
        pass
    elif isinstance(spec, Atoms) and method in ("auto", "exact") and plan is None:
        cut = plan_jump_cutoff(spec)
        drift = drift + cut.drift
        base = lambda rng, size: _poisson_scatter(rng, cut.rate, t, size, cut.sampler, d)
    elif (
        method in ("auto", "exact")
        and plan is None
        and isinstance(spec, IsotropicPower)
        and math.isinf(spec.r_max)
    ):
        scale = _exact_stable_scale(spec, t)
        alpha = spec.alpha
        if d == 1:
            base = lambda rng, size: scale * _standard_symmetric_stable(
                rng, alpha, size
            ).reshape(-1, 1)
        else:
            base = lambda rng, size: scale * _standard_symmetric_stable(
                rng, alpha, size, d
            )
    elif (
        method in ("auto", "exact")
        and plan is None
        and isinstance(spec, Pushforward)
        and isinstance(spec.base, IsotropicPower)
        and math.isinf(spec.base.r_max)
    ):
        scale = _exact_stable_scale(spec.base, t)
        alpha, bd = spec.base.alpha, spec.base.d
        mat = spec.matrix.T

        def base(rng, size, _m=mat, _s=scale, _a=alpha, _bd=bd):
            s = _s * _standard_symmetric_stable(rng, _a, size, _bd)
            if s.ndim == 1:
                s = s.reshape(-1, 1)
            return s @ _m

    else:
        if method == "exact":
            raise ContractError(
                f"no exact sampler for a {type(spec).__name__} jump spec; "
                "use the jump-cutoff route (method='cutoff')"
            )
        cut = plan if plan is not None else plan_jump_cutoff(spec, small_jumps=small_jumps)
        drift = drift + cut.drift
        base = lambda rng, size: _poisson_scatter(rng, cut.rate, t, size, cut.sampler, d)
        if cut.small_jumps == "gaussian":
            extra_std = cut.gaussian_std * root_t

    def draw(rng, size):
        out = np.zeros((size, d)) + t * drift
        if gauss is not None:
            out += root_t * rng.standard_normal((size, d)) @ gauss.T
        if base is not None:
            out += base(rng, size)
        if extra_std:
            out += extra_std * rng.standard_normal((size, d))
        return out

    return draw


def sample_levy_increment(
    model,
    t,
    n,
    seeds: SeedPolicy | None = None,
    ctx=(),
    method="auto",
    plan=None,
    small_jumps="drop",
    workers=1,
):
    """n i.i.d. increments of X_t; shape (n,) for d = 1, else (n, d).

    method "auto" picks the exact route when one exists and falls back to
    the jump-cutoff plan; "exact" refuses specs that would need the cutoff;
    "cutoff" forces the cutoff route (pass plan to pin eps).  Only models
    with stationary increments are accepted.
    """
    if not t > 0:
        raise ContractError("increment duration must be positive")
    if method not in ("auto", "exact", "cutoff"):
        raise ContractError("method must be 'auto', 'exact', or 'cutoff'")
    if not isinstance(model, (LevyModel, CompoundPoissonModel)):
        raise ContractError(
            "state-dependent models have no stationary increments; "
            "use simulate_path or path_statistics"
        )
    if method == "cutoff":
        if isinstance(model, CompoundPoissonModel):
            raise ContractError("compound Poisson sampling is exact already")
        if model.triplet.measure is None:
            raise ContractError("no jump part to approximate")
        if plan is None:
            plan = plan_jump_cutoff(model.triplet.measure, small_jumps=small_jumps)
    seeds = seeds or SeedPolicy()
    draw = _resolve_levy_draw(model, float(t), method, plan, small_jumps)
    out = _batched(seeds, tuple(ctx), n, draw, workers)
    return out[:, 0] if model.d == 1 else out


# ---------------------------------------------------------------------------
# paths


@dataclass
class PathSample:
    """One path on a time grid.

    times includes the exact jump times for explicit-jump drivers (the
    jump log is filled then); running_sup is sup_{s <= t_i} |X_s - x0| as
    resolved on the evaluated points, exact for piecewise-linear paths and
    a disclosed lower bound otherwise.  exit_time is the first evaluated
    time at which |X - x0| >= exit_radius, +inf if the radius is declared
    but never crossed, None if no radius was declared.
    """

    times: np.ndarray
    states: np.ndarray
    running_sup: np.ndarray
    exit_radius: float | None
    exit_time: float | None
    jumps: list | None


def _event_driven(model):
    if isinstance(model, CompoundPoissonModel):
        return True
    if isinstance(model, LevyModel):
        return (
            isinstance(model.triplet.measure, Atoms)
            and model._gauss is None
        )
    if isinstance(model, SDEModel):
        inner = model.driver
        if not _event_driven(inner):
            return False
        drift = (
            inner.drift
            if isinstance(inner, CompoundPoissonModel)
            else inner.triplet.b + plan_jump_cutoff(inner.triplet.measure).drift
        )
        # between jumps the state would follow an ODE; only a still driver
        # keeps the event route exact
        return not np.any(drift)
    return False


def _event_ingredients(model):
    if isinstance(model, CompoundPoissonModel):
        return model.jumps, model.rate, model.drift
    cut = plan_jump_cutoff(model.triplet.measure)
    return model.triplet.measure, cut.rate, model.triplet.b + cut.drift


def _sigma_at(model: SDEModel, x):
    if callable(model.sigma):
        return np.atleast_2d(np.asarray(model.sigma(x), dtype=float))
    return model.sigma


def simulate_path(
    model,
    x0,
    horizon,
    step,
    seeds: SeedPolicy | None = None,
    ctx=(),
    exit_radius=None,
):
    """One path over [0, horizon] with running supremum and exit time.

    Compound Poisson dynamics (directly, through a pure-atom triplet, or
    through a drift-free SDE driver) are simulated event-exactly and the
    jump log records (time, path jump); everything else steps the grid.
    """
    if not horizon > 0:
        raise ContractError("horizon must be positive")
    if not 0 < step <= horizon:
        raise ContractError("step must be positive and no larger than the horizon")
    d = model.d
    x0 = np.full(d, float(x0)) if np.ndim(x0) == 0 else np.asarray(x0, dtype=float)
    if x0.shape != (d,):
        raise ContractError(f"x0 must be a length-{d} vector")
    if exit_radius is not None and not exit_radius > 0:
        raise ContractError("exit radius must be positive")
    seeds = seeds or SeedPolicy()
    rng = seeds.stream(*ctx, 0)
    n_steps = int(math.ceil(horizon / step - 1e-12))
    grid = np.linspace(0.0, horizon, n_steps + 1)

    if _event_driven(model):
        times, states, sups, jumps = _run_event_path(model, x0, horizon, grid, rng)
    else:
        times = grid
        states = np.empty((n_steps + 1, d))
        states[0] = x0
        x = x0.reshape(1, -1).copy()
        h = horizon / n_steps
        stepper = _resolve_stepper(model, h)
        for i in range(n_steps):
            x = x + stepper(rng, x)
            states[i + 1] = x[0]
        sups = np.maximum.accumulate(np.linalg.norm(states - x0, axis=1))
        jumps = None

    exit_time = None
    if exit_radius is not None:
        crossed = np.nonzero(sups >= exit_radius)[0]
        exit_time = float(times[crossed[0]]) if crossed.size else math.inf
    return PathSample(times, _squeeze(states, d), sups, exit_radius, exit_time, jumps)


def _run_event_path(model, x0, horizon, grid, rng):
    if isinstance(model, SDEModel):
        atoms, rate, _ = _event_ingredients(model.driver)
        drift = np.zeros(model.d)
    else:
        atoms, rate, drift = _event_ingredients(model)
    k = int(rng.poisson(rate * horizon))
    jt = np.sort(rng.uniform(0.0, horizon, k))
    picks = rng.choice(len(atoms.weights), size=k, p=atoms.weights / rate)
    times = np.union1d(grid, jt)
    d = model.d
    states = np.empty((len(times), d))
    sups = np.empty(len(times))
    jumps = []
    x = x0.copy()
    sup = 0.0
    prev = 0.0
    j = 0
    for i, tk in enumerate(times):
        while j < k and jt[j] <= tk:
            x = x + drift * (jt[j] - prev)
            sup = max(sup, float(np.linalg.norm(x - x0)))  # pre-jump value
            dx = atoms.locations[picks[j]]
            if isinstance(model, SDEModel):
                dx = _sigma_at(model, x) @ dx
            x = x + dx
            sup = max(sup, float(np.linalg.norm(x - x0)))
            jumps.append((float(jt[j]), dx if d > 1 else float(dx[0])))
            prev = jt[j]
            j += 1
        x = x + drift * (tk - prev)
        prev = tk
        sup = max(sup, float(np.linalg.norm(x - x0)))
        states[i] = x
        sups[i] = sup
    return times, states, sups, jumps


def _resolve_stepper(model, h, method="auto", plan=None, small_jumps="drop"):
    """Build step(rng, x_batch) -> (k, d) increments over one step of size h."""
    if isinstance(model, (LevyModel, CompoundPoissonModel)):
        draw = _resolve_levy_draw(model, h, method, plan, small_jumps)
        return lambda rng, x: draw(rng, len(x))
    if isinstance(model, StableLikeModel):
        d = model.d

        def step(rng, x):
            g = _coeff_batch(model.gamma, x)
            if not (g.min() > 0.0 and g.max() < 2.0):
                raise DomainError(
                    "stable-like order left (0, 2) along the path at "
                    f"gamma range [{g.min():.4g}, {g.max():.4g}]"
                )
            s = _standard_symmetric_stable(rng, g, len(x), d)
            if s.ndim == 1:
                s = s.reshape(-1, 1)
            return (h ** (1.0 / g))[:, None] * s

        return step
    if isinstance(model, RelativisticModel):
        d = model.d

        def step(rng, x):
            g = _coeff_batch(model.gamma, x)
            m = _coeff_batch(model.m, x)
            if not (g.min() > 0.0 and g.max() < 2.0 and m.min() > 0.0):
                raise DomainError(
                    "relativistic coefficients left their range along the path"
                )
            return _relativistic_increment(rng, g, m, h, len(x), d)

        return step
    if isinstance(model, SDEModel):
        inner = _resolve_stepper(model.driver, h, method, plan, small_jumps)
        if callable(model.sigma):
            sig = model.sigma

            def step(rng, x):
                dl = inner(rng, x)
                # row loop; batch-aware sigma callables are not assumed
                return np.stack(
                    [
                        np.atleast_2d(np.asarray(sig(xi), dtype=float)) @ di
                        for xi, di in zip(x, dl)
                    ]
                )

            return step
        mat = model.sigma.T
        return lambda rng, x: inner(rng, x) @ mat
    raise ContractError(f"no path scheme for {type(model).__name__}")


@dataclass
class PathBatch:
    """Grid-path statistics for n replicates.

    endpoints are X_t (or X_{t & tau} when a stop ball is declared);
    running_sup is the grid supremum of |X - x0|, a disclosed lower bound
    of the true supremum; exit_times are freeze times (inf when the path
    never left the stop ball), None when no ball was declared.
    """

    t: float
    endpoints: np.ndarray
    running_sup: np.ndarray
    exit_times: np.ndarray | None
    steps: int
    n: int


def path_statistics(
    model,
    x0,
    t,
    n,
    seeds: SeedPolicy | None = None,
    ctx=(),
    steps=64,
    stopped_in=None,
    workers=1,
    method="auto",
    plan=None,
    small_jumps="drop",
):
    """Vectorized grid paths keeping endpoints, grid sup, and stop times.

    stopped_in = (center, radius) freezes each path at its first grid time
    outside the open ball, giving X_{t & tau_K} endpoint statistics.
    """
    if not t > 0:
        raise ContractError("horizon must be positive")
    if not steps >= 1:
        raise ContractError("need at least one step")
    d = model.d
    x0 = np.full(d, float(x0)) if np.ndim(x0) == 0 else np.asarray(x0, dtype=float)
    if x0.shape != (d,):
        raise ContractError(f"x0 must be a length-{d} vector")
    center = radius = None
    if stopped_in is not None:
        c, radius = stopped_in
        center = np.full(d, float(c)) if np.ndim(c) == 0 else np.asarray(c, dtype=float)
        if not radius > 0:
            raise ContractError("stop ball radius must be positive")
    seeds = seeds or SeedPolicy()
    h = float(t) / int(steps)
    stepper = _resolve_stepper(model, h, method, plan, small_jumps)

    def run(rng, size):
        x = np.tile(x0, (size, 1))
        sup = np.zeros(size)
        texit = np.full(size, math.inf)
        live = np.ones(size, dtype=bool)
        if radius is not None and np.linalg.norm(x0 - center) >= radius:
            texit[:] = 0.0
            live[:] = False
        for i in range(int(steps)):
            if live.any():
                x[live] += stepper(rng, x[live])
            np.maximum(sup, np.linalg.norm(x - x0, axis=1), out=sup)
            if radius is not None:
                out_now = live & (
                    np.linalg.norm(x - center, axis=1) >= radius
                )
                texit[out_now] = (i + 1) * h
                live &= ~out_now
        cols = [x, sup[:, None]]
        cols.append(texit[:, None] if radius is not None else np.empty((size, 0)))
        return np.hstack(cols)

    packed = _batched(seeds, tuple(ctx), n, run, workers)
    endpoints = packed[:, :d]
    sup = packed[:, d]
    texit = packed[:, d + 1] if radius is not None else None
    return PathBatch(float(t), _squeeze(endpoints, d), sup, texit, int(steps), int(n))


def endpoint_sample(
    model,
    x0,
    t,
    n,
    seeds: SeedPolicy | None = None,
    ctx=(),
    steps=64,
    workers=1,
    method="auto",
    plan=None,
    small_jumps="drop",
):
    """n draws of X_t started at x0; exact in law whenever possible.

    Levy and compound Poisson endpoints are single increments; an SDE with
    constant sigma is the exact pushforward of its driver increment.
    State-dependent models run the grid scheme with the given step count.
    """
    d = model.d
    x0v = np.full(d, float(x0)) if np.ndim(x0) == 0 else np.asarray(x0, dtype=float)
    if isinstance(model, (LevyModel, CompoundPoissonModel)):
        inc = sample_levy_increment(
            model, t, n, seeds, ctx, method=method, plan=plan,
            small_jumps=small_jumps, workers=workers,
        )
        return inc + (x0v[0] if d == 1 else x0v)
    if isinstance(model, SDEModel) and not callable(model.sigma):
        inc = sample_levy_increment(
            model.driver, t, n, seeds, ctx, method=method, plan=plan,
            small_jumps=small_jumps, workers=workers,
        )
        if inc.ndim == 1:
            inc = inc.reshape(-1, 1)
        out = x0v + inc @ model.sigma.T
        return _squeeze(out, d)
    stats = path_statistics(
        model, x0v, t, n, seeds, ctx, steps=steps, workers=workers,
        method=method, plan=plan, small_jumps=small_jumps,
    )
    return stats.endpoints


def _squeeze(arr, d):
    return arr[:, 0] if d == 1 and arr.ndim == 2 else arr


# ---------------------------------------------------------------------------
# hitting rates


def _region_indicator(A, d):
    kind = A[0]
    if kind == "interval":
        _, lo, hi = A
        if d != 1:
            raise ContractError("interval targets are one-dimensional")
        if lo > hi:
            raise ContractError("empty interval")
        if lo <= 0.0 <= hi:
            raise ContractError("target set must be bounded away from the origin")
        return lambda y: (y >= lo) & (y <= hi)
    if kind == "annulus":
        _, r0, r1 = A
        if not 0.0 < r0 <= r1:
            raise ContractError("annulus must be bounded away from the origin")

        def hit(y):
            r = np.abs(y) if d == 1 else np.linalg.norm(y, axis=1)
            return (r >= r0) & (r <= r1)

        return hit
    if kind == "box":
        _, lo, hi = A
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != (d,) or hi.shape != (d,):
            raise ContractError(f"box bounds must be length-{d} vectors")
        if np.any(lo > hi):
            raise ContractError("empty box")
        if not np.any((lo > 0.0) | (hi < 0.0)):
            raise ContractError("target set must be bounded away from the origin")

        def hit(y):
            yy = y.reshape(-1, d)
            return np.all((yy >= lo) & (yy <= hi), axis=1)

        return hit
    raise ContractError(f"unknown target set kind {kind!r}")


def empirical_hitting_rate(
    model,
    x,
    A,
    t,
    N,
    seeds: SeedPolicy | None = None,
    ctx=(),
    workers=1,
    steps=64,
    plan=None,
):
    """MCEstimate of (1/t) P^x(X_t - x in A).

    A is ("interval", lo, hi), ("annulus", r0, r1), or ("box", lo, hi) and
    must be bounded away from the origin.  The stderr is binomial.
    """
    if not t > 0:
        raise ContractError("t must be positive")
    if not N >= 1:
        raise ContractError("need at least one replicate")
    hit = _region_indicator(A, model.d)
    end = endpoint_sample(model, x, t, N, seeds, ctx, steps=steps, workers=workers, plan=plan)
    x0 = np.full(model.d, float(x)) if np.ndim(x) == 0 else np.asarray(x, dtype=float)
    disp = end - (x0[0] if model.d == 1 else x0)
    k = int(np.count_nonzero(hit(disp)))
    p = k / N
    spread = math.sqrt(max(k * (1.0 - p), 0.0) / max(N - 1, 1))
    return MCEstimate(p / t, spread / (math.sqrt(N) * t), int(N))
