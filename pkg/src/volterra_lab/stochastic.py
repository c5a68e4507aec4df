"""Random forcing generators, tail models, and ensemble verification.

Almost-sure statements about i.i.d. driven systems are rendered at desk
scale as seeded ensembles: every path owns an independent counter-based
generator stream derived from (master seed, path index), statistics are
computed per path, and the report carries the fraction of paths landing
inside a pre-registered band.  Identical configuration and seed reproduce
every number bitwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _stats

from .asymptotics import (
    ConvexFunctional,
    LimsupThresholds,
    ScalingModel,
    estimate_limsup,
    make_phi,
    time_average,
)
from .core import Kernel, solve_linear
from .exceptions import (
    InputError,
    ParameterError,
    TrajectoryOverflowError,
    UndefinedRatioError,
)
from .growth_catalogue import catalogue_entry
from .series import LogTrajectory, Trajectory, abs_log_series, ratio_series

__all__ = [
    "TailModel",
    "make_tail_model",
    "ForcingGenerator",
    "generate",
    "EnvelopeReport",
    "envelope_sums",
    "TailClassification",
    "classify_tail",
    "EnsembleSpec",
    "StatisticSpec",
    "EnsembleResult",
    "ensemble_verify",
    "STATISTICS",
]


# --------------------------------------------------------------------------
# tail models
# --------------------------------------------------------------------------

def _default_modulus(x):
    return np.log(x) ** 2


@dataclass(frozen=True)
class TailModel:
    """Distribution tails: F, the survival function G = 1 - F, quantiles.

    ``sf`` and ``upper_quantile`` are stored separately from ``cdf`` and
    ``quantile`` so far-tail probabilities keep full precision.  ``mu`` is
    the slow-variation modulus used by the rapid-tail certificate, probed
    at exponent ``delta_star`` (any positive probe exponent is admissible;
    small values keep the finite-sample certificate decisive).
    """

    family: str
    params: dict
    cdf: callable
    sf: callable
    quantile: callable
    upper_quantile: callable
    symmetric: bool
    bounded_support: bool = False
    mu: callable = _default_modulus
    delta_star: float = 0.025
    big_delta: float = 1.0

    def tail_probability(self, threshold):
        """P[|X| > t] = G(t) + F(-t)."""
        t = np.asarray(threshold, dtype=np.float64)
        return self.sf(t) + self.cdf(-t)

    def sample(self, rng, size):
        """Inverse-transform draws; one uniform consumed per sample."""
        u = np.maximum(rng.random(size), 1e-300)
        return self.quantile(u)

    def validate(self, grid_points: int = 512) -> None:
        lo = float(self.quantile(np.asarray(1e-8)))
        hi = float(self.quantile(np.asarray(1.0 - 1e-8)))
        grid = np.linspace(lo, hi, grid_points)
        f = self.cdf(grid)
        if np.any(np.diff(f) < -1e-12):
            raise ParameterError(f"{self.family}: cdf is not nondecreasing")
        if not (f[0] < 1e-6 and f[-1] > 1 - 1e-6):
            raise ParameterError(f"{self.family}: cdf does not span (0, 1)")
        ps = np.logspace(-8, -2, 25)
        xs = self.upper_quantile(ps)
        back = self.upper_quantile(self.sf(xs))
        rel = np.abs(back - xs) / np.maximum(np.abs(xs), 1e-30)
        if np.any(rel > 1e-8):
            raise ParameterError(f"{self.family}: quantile/survival round trip off")
        if self.symmetric:
            probe = self.upper_quantile(np.logspace(-6, -1, 12))
            if np.any(np.abs(self.cdf(-probe) - self.sf(probe)) > 1e-12):
                raise ParameterError(f"{self.family}: tails are not symmetric")


def _normal_model(sigma):
    if sigma <= 0:
        raise ParameterError("normal sigma must be positive")
    dist = _stats.norm(scale=sigma)
    return TailModel(
        family="normal",
        params={"sigma": float(sigma)},
        cdf=dist.cdf,
        sf=dist.sf,
        quantile=dist.ppf,
        upper_quantile=dist.isf,
        symmetric=True,
    )


def _symmetric_power_model(alpha, c1, c2):
    alpha, c1, c2 = float(alpha), float(c1), float(c2)
    if alpha <= 0:
        raise ParameterError("power tail index alpha must be positive")
    if c1 <= 0 or c2 <= 0 or c1 + c2 > 1 + 1e-12:
        raise ParameterError("tail weights must be positive with c1 + c2 <= 1")
    mid = max(1.0 - c1 - c2, 0.0)

    def cdf(x):
        x = np.asarray(x, dtype=np.float64)
        return np.select(
            [x <= -1.0, x >= 1.0],
            [c1 * np.abs(x) ** -alpha, 1.0 - c2 * np.where(x >= 1.0, x, 1.0) ** -alpha],
            default=c1 + mid * (x + 1.0) / 2.0,
        )

    def sf(x):
        x = np.asarray(x, dtype=np.float64)
        return np.select(
            [x >= 1.0, x <= -1.0],
            [c2 * np.where(x >= 1.0, x, 1.0) ** -alpha, 1.0 - c1 * np.abs(x) ** -alpha],
            default=c2 + mid * (1.0 - x) / 2.0,
        )

    def quantile(u):
        u = np.asarray(u, dtype=np.float64)
        with np.errstate(divide="ignore"):
            lower = -((c1 / np.maximum(u, 1e-300)) ** (1.0 / alpha))
            upper = (c2 / np.maximum(1.0 - u, 1e-300)) ** (1.0 / alpha)
        if mid > 0:
            middle = -1.0 + 2.0 * (u - c1) / mid
        else:
            middle = np.ones_like(u)
        return np.select([u <= c1, u >= 1.0 - c2], [lower, upper], default=middle)

    def upper_quantile(p):
        p = np.asarray(p, dtype=np.float64)
        with np.errstate(divide="ignore"):
            upper = (c2 / np.maximum(p, 1e-300)) ** (1.0 / alpha)
        if mid > 0:
            middle = 1.0 - 2.0 * (p - c2) / mid
        else:
            middle = np.ones_like(p)
        with np.errstate(divide="ignore"):
            lower = -((c1 / np.maximum(1.0 - p, 1e-300)) ** (1.0 / alpha))
        return np.select([p <= c2, p >= 1.0 - c1], [upper, lower], default=middle)

    return TailModel(
        family="symmetric_power",
        params={"alpha": alpha, "c1": c1, "c2": c2},
        cdf=cdf,
        sf=sf,
        quantile=quantile,
        upper_quantile=upper_quantile,
        symmetric=(abs(c1 - c2) < 1e-15 and mid == 0.0),
    )


def _weibull_symmetric_model(scale, shape):
    lam, k = float(scale), float(shape)
    if lam <= 0 or k <= 0:
        raise ParameterError("weibull scale and shape must be positive")

    def _one_sided_sf(x):
        return np.exp(-((np.maximum(x, 0.0) / lam) ** k))

    def cdf(x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x < 0, 0.5 * _one_sided_sf(-x), 1.0 - 0.5 * _one_sided_sf(x))

    def sf(x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x >= 0, 0.5 * _one_sided_sf(x), 1.0 - 0.5 * _one_sided_sf(-x))

    def quantile(u):
        u = np.asarray(u, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            up = lam * (-np.log(np.maximum(2.0 * (1.0 - u), 1e-300))) ** (1.0 / k)
            down = -lam * (-np.log(np.maximum(2.0 * u, 1e-300))) ** (1.0 / k)
        return np.where(u >= 0.5, np.maximum(up, 0.0), np.minimum(down, 0.0))

    def upper_quantile(p):
        p = np.asarray(p, dtype=np.float64)
        with np.errstate(divide="ignore"):
            up = lam * (-np.log(np.maximum(2.0 * p, 1e-300))) ** (1.0 / k)
        return np.where(p <= 0.5, np.maximum(up, 0.0), quantile(1.0 - p))

    return TailModel(
        family="weibull_symmetric",
        params={"scale": lam, "shape": k},
        cdf=cdf,
        sf=sf,
        quantile=quantile,
        upper_quantile=upper_quantile,
        symmetric=True,
    )


def _uniform_model(low, high):
    low, high = float(low), float(high)
    if not low < high:
        raise ParameterError("uniform support must satisfy low < high")
    span = high - low

    def cdf(x):
        return np.clip((np.asarray(x, dtype=np.float64) - low) / span, 0.0, 1.0)

    def sf(x):
        return np.clip((high - np.asarray(x, dtype=np.float64)) / span, 0.0, 1.0)

    return TailModel(
        family="uniform",
        params={"low": low, "high": high},
        cdf=cdf,
        sf=sf,
        quantile=lambda u: low + span * np.asarray(u, dtype=np.float64),
        upper_quantile=lambda p: high - span * np.asarray(p, dtype=np.float64),
        symmetric=(abs(low + high) < 1e-15),
        bounded_support=True,
    )


def make_tail_model(family: str, **params) -> TailModel:
    if family == "normal":
        return _normal_model(params.get("sigma", 1.0))
    if family == "symmetric_power":
        return _symmetric_power_model(
            params.get("alpha", 2.0), params.get("c1", 0.5), params.get("c2", 0.5)
        )
    if family == "weibull_symmetric":
        return _weibull_symmetric_model(params.get("scale", 1.0), params.get("shape", 1.0))
    if family == "uniform":
        return _uniform_model(params.get("low", -1.0), params.get("high", 1.0))
    if family == "custom_quantile":
        required = {"cdf", "sf", "quantile", "upper_quantile"}
        if not required <= set(params):
            raise ParameterError(f"custom_quantile needs callables {sorted(required)}")
        return TailModel(
            family="custom_quantile",
            params={},
            cdf=params["cdf"],
            sf=params["sf"],
            quantile=params["quantile"],
            upper_quantile=params["upper_quantile"],
            symmetric=bool(params.get("symmetric", False)),
            bounded_support=bool(params.get("bounded_support", False)),
        )
    raise ParameterError(f"unknown tail family {family!r}")


# --------------------------------------------------------------------------
# forcing generators
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ForcingGenerator:
    """Seeded description of a forcing sequence on indices 1..horizon.

    Kinds: "iid" (tail model draws), "random_walk_drift" and
    "geometric_random_walk" (drift plus centered noise increments),
    "deterministic" (growth-catalogue entry), "modulated" (deterministic
    base times a bounded stationary factor).  Index 0 of the output is
    always the zero placeholder; the recursion never reads it.
    """

    kind: str
    seed: int = 0
    tail: TailModel = None
    drift: float = 0.0
    noise: TailModel = None
    name: str = None
    params: dict = field(default_factory=dict)
    base: dict = None
    factor: dict = None


def _rng_for(gen: ForcingGenerator):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(gen.seed)))


def _deterministic_logs(name, params, horizon):
    entry = catalogue_entry(name, **(params or {}))
    if entry.min_index > 1:
        raise InputError(
            f"catalogue entry {name!r} starts at index {entry.min_index}; it "
            "cannot serve as a forcing sequence"
        )
    logs = entry.log_fn(np.arange(1, horizon + 1))
    if not np.all(np.isfinite(logs)):
        raise InputError(f"catalogue entry {name!r} overflowed in log space")
    return entry, logs


def _factor_values(spec, horizon, rng):
    kind = spec.get("kind")
    n = np.arange(1, horizon + 1)
    if kind == "iid_uniform":
        low = float(spec.get("low", 0.0))
        high = float(spec.get("high", 1.0))
        if not low < high:
            raise ParameterError("factor support must satisfy low < high")
        return rng.uniform(low, high, horizon)
    if kind == "periodic":
        profile = np.asarray(spec.get("profile", ()), dtype=np.float64)
        if profile.size < 1 or not np.all(np.isfinite(profile)):
            raise ParameterError("periodic factor needs a finite nonempty profile")
        return profile[n % len(profile)]
    if kind == "sinusoid":
        amps = np.asarray(spec.get("amplitudes", (1.0,)), dtype=np.float64)
        freqs = np.asarray(spec.get("frequencies", (1.0,)), dtype=np.float64)
        if amps.shape != freqs.shape:
            raise ParameterError("sinusoid amplitudes and frequencies must pair up")
        offset = float(spec.get("offset", 0.0))
        out = np.full(horizon, offset)
        for a, w in zip(amps, freqs):
            out += a * np.sin(w * n)
        return out
    raise ParameterError(f"unknown modulation factor kind {spec.get('kind')!r}")


def generate(gen: ForcingGenerator, horizon: int, log_domain: bool = False, rng=None):
    """Materialise the forcing on indices 0..horizon (index 0 set to 0).

    Identical (kind, parameters, seed, horizon) produce bitwise identical
    output; the draws come from a counter-based Philox stream.
    """
    if horizon < 1 or int(horizon) != horizon:
        raise InputError("horizon must be an integer >= 1")
    horizon = int(horizon)
    if rng is None:
        rng = _rng_for(gen)

    if gen.kind == "iid":
        if gen.tail is None:
            raise ParameterError("iid forcing needs a tail model")
        vals = np.concatenate(([0.0], gen.tail.sample(rng, horizon)))
        return LogTrajectory.from_values(vals) if log_domain else Trajectory(vals)

    if gen.kind == "random_walk_drift":
        steps = gen.noise.sample(rng, horizon) if gen.noise is not None else np.zeros(horizon)
        walk = gen.drift * np.arange(1, horizon + 1) + np.cumsum(steps)
        vals = np.concatenate(([0.0], walk))
        return LogTrajectory.from_values(vals) if log_domain else Trajectory(vals)

    if gen.kind == "geometric_random_walk":
        steps = gen.noise.sample(rng, horizon) if gen.noise is not None else np.zeros(horizon)
        logs = gen.drift * np.arange(1, horizon + 1) + np.cumsum(steps)
        if log_domain:
            la = np.concatenate(([-np.inf], logs))
            sg = np.concatenate(([0.0], np.ones(horizon)))
            return LogTrajectory(la, sg)
        if np.any(logs > 709.0):
            raise InputError(
                "geometric random walk overflows plain doubles at this horizon; "
                "run with log_domain=True"
            )
        return Trajectory(np.concatenate(([0.0], np.exp(logs))))

    if gen.kind == "deterministic":
        entry, logs = _deterministic_logs(gen.name, gen.params, horizon)
        if log_domain:
            la = np.concatenate(([-np.inf], logs))
            sg = np.concatenate(([0.0], np.ones(horizon)))
            return LogTrajectory(la, sg)
        try:
            vals = entry.values(np.arange(1, horizon + 1))
        except ParameterError as err:
            raise InputError(f"{err}; run with log_domain=True") from err
        return Trajectory(np.concatenate(([0.0], vals)))

    if gen.kind == "modulated":
        if not gen.base or not gen.factor:
            raise ParameterError("modulated forcing needs base and factor specs")
        base_spec = dict(gen.base)
        base_name = base_spec.pop("name")
        base_params = base_spec.pop("params", base_spec)
        entry, logs = _deterministic_logs(base_name, base_params, horizon)
        factor = _factor_values(gen.factor, horizon, rng)
        if log_domain:
            with np.errstate(divide="ignore"):
                la = np.concatenate(([-np.inf], np.log(np.abs(factor)) + logs))
            sg = np.concatenate(([0.0], np.sign(factor)))
            return LogTrajectory(la, sg)
        try:
            base_vals = entry.values(np.arange(1, horizon + 1))
        except ParameterError as err:
            raise InputError(f"{err}; run with log_domain=True") from err
        return Trajectory(np.concatenate(([0.0], factor * base_vals)))

    raise ParameterError(f"unknown forcing kind {gen.kind!r}")


# --------------------------------------------------------------------------
# Borel-Cantelli envelope accounting
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EnvelopeReport:
    """Partial sums of sum_n P[|H(n)| > K a(n)] over a grid of K values.

    Verdicts follow a log-log regression of the summand over the last
    decade of indices: fitted decay exponent strictly below -1 reads
    convergent, at or above -1 divergent, an unusable fit undecided.
    ``crossing`` is the midpoint between the largest divergent and the
    smallest convergent K when the grid brackets the transition.
    """

    k_grid: np.ndarray
    partial_sums: np.ndarray
    verdicts: tuple
    slopes: tuple
    crossing: float
    start_index: int


def _decay_regression(indices, summands):
    """Classify series convergence from the summand's log-log decay."""
    pos = summands > 0.0
    if not np.any(pos):
        return "convergent", float("-inf")
    if np.count_nonzero(pos) < 8:
        return "undecided", float("nan")
    slope = float(np.polyfit(np.log(indices[pos]), np.log(summands[pos]), 1)[0])
    return ("convergent" if slope < -1.0 else "divergent"), slope


def envelope_sums(tail: TailModel, a: Trajectory, k_grid, horizon: int = None) -> EnvelopeReport:
    """Exact partial sums S_N(a, K) of the exceedance series for each K."""
    if isinstance(a, LogTrajectory):
        a = a.to_plain()
    if np.any(a.values <= 0.0) or np.any(np.diff(a.values) < 0.0):
        raise InputError("envelope scale must be positive and nondecreasing")
    hi = a.end if horizon is None else min(a.end, int(horizon))
    win = a.window(a.start, hi)
    idx = win.indices().astype(np.float64)
    k_grid = np.asarray(sorted(float(k) for k in k_grid))
    if k_grid.size == 0 or np.any(k_grid <= 0.0):
        raise InputError("K grid must contain positive values")
    sums = np.empty((k_grid.size, len(win)))
    verdicts = []
    slopes = []
    reg_lo = max(win.start, hi // 10)
    reg_mask = idx >= reg_lo
    for i, k in enumerate(k_grid):
        summand = np.asarray(tail.tail_probability(k * win.values), dtype=np.float64)
        sums[i] = np.cumsum(summand)
        verdict, slope = _decay_regression(idx[reg_mask], summand[reg_mask])
        verdicts.append(verdict)
        slopes.append(slope)
    crossing = None
    divergent = [k for k, v in zip(k_grid, verdicts) if v == "divergent"]
    convergent = [k for k, v in zip(k_grid, verdicts) if v == "convergent"]
    if divergent and convergent and max(divergent) < min(convergent):
        crossing = 0.5 * (max(divergent) + min(convergent))
    return EnvelopeReport(
        k_grid=k_grid,
        partial_sums=sums,
        verdicts=tuple(verdicts),
        slopes=tuple(slopes),
        crossing=crossing,
        start_index=win.start,
    )


# --------------------------------------------------------------------------
# tail classification
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TailClassification:
    verdict: str          # "rapid" | "regularly-varying" | "undecided"
    alpha: float = None
    case: str = None      # "i" | "ii" | "iii"
    ratio_limit: float = None
    detail: dict = field(default_factory=dict)


def _side_slopes(qfun):
    """Log-log tail slopes over a near and a far probe decade."""
    ps = np.array([1e-2, 1e-4, 1e-6])
    xs = np.abs(np.asarray(qfun(ps), dtype=np.float64))
    if np.any(~np.isfinite(xs)) or np.any(xs <= 0.0):
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        dx_near = math.log(xs[1]) - math.log(xs[0])
        dx_far = math.log(xs[2]) - math.log(xs[1])
    if dx_near <= 0.0 or dx_far <= 0.0:
        return None
    dp = math.log(1e-4) - math.log(1e-2)
    return dp / dx_near, dp / dx_far


def _rv_fit(tail: TailModel):
    """Power-decay fit of either tail; None when the slope drifts."""
    sides = {}
    right = _side_slopes(tail.upper_quantile)
    left = _side_slopes(lambda p: tail.quantile(np.asarray(p)))
    for label, pair in (("right", right), ("left", left)):
        if pair is None:
            continue
        near, far = pair
        if far >= 0.0:
            continue
        if abs(far - near) <= max(0.15 * abs(far), 0.1):
            sides[label] = -0.5 * (near + far)
    if not sides:
        return None
    alpha = min(sides.values())
    return {"alpha": alpha, "sides": sides}


def _ssv_certificate(tail: TailModel, probes, tolerance):
    """Finite-sample super-slow-variation check at exponents {0, delta*}."""
    xs = np.asarray(probes, dtype=np.float64)
    detail = {}
    worst = 0.0
    for delta in (0.0, tail.delta_star):
        scaled = xs * tail.mu(xs) ** delta
        base = np.asarray(tail.upper_quantile(1.0 / xs), dtype=np.float64)
        moved = np.asarray(tail.upper_quantile(1.0 / scaled), dtype=np.float64)
        if np.any(~np.isfinite(base)) or np.any(base <= 0.0):
            return False, {"error": "quantile not positive at probe points"}
        dev = float(np.max(np.abs(moved / base - 1.0)))
        detail[f"deviation_delta_{delta:g}"] = dev
        worst = max(worst, dev)
    ratio_ok = worst < tolerance
    n = np.logspace(4, 5, 60)
    summand = 1.0 / (n * tail.mu(n) ** tail.delta_star)
    verdict, slope = _decay_regression(n, summand)
    detail["modulus_series_slope"] = slope
    detail["modulus_series_verdict"] = verdict
    return ratio_ok and verdict == "convergent", detail


def classify_tail(tail: TailModel, probes=(1e3, 1e4, 1e5, 1e6),
                  ssv_tolerance: float = 0.02) -> TailClassification:
    """Sort a tail model into rapid (thin) or regularly varying (power).

    The rapid certificate checks that the upper quantile barely moves when
    its argument is rescaled by mu(x)**delta*, and that the modulus series
    sum 1/(n mu(n)**delta*) passes the convergence regression.  The
    regularly-varying branch fits a stable log-log tail slope -alpha and
    decides the side balance from the limit of G(x) / F(-x): infinite is
    case i, zero case ii, a finite positive constant case iii.  Conflicting
    or failing certificates yield "undecided".
    """
    rv = _rv_fit(tail)
    rapid_ok, ssv_detail = _ssv_certificate(tail, probes, ssv_tolerance)
    if rapid_ok and rv is not None:
        return TailClassification(
            verdict="undecided", detail={"conflict": True, "ssv": ssv_detail, "rv": rv}
        )
    if rapid_ok:
        return TailClassification(verdict="rapid", detail={"ssv": ssv_detail})
    if rv is not None:
        xs = np.abs(np.asarray(tail.upper_quantile(np.array([1e-4, 1e-6]))))
        if "left" in rv["sides"]:
            xs = np.maximum(xs, np.abs(np.asarray(tail.quantile(np.array([1e-4, 1e-6])))))
        with np.errstate(divide="ignore"):
            num = np.asarray(tail.sf(xs), dtype=np.float64)
            den = np.asarray(tail.cdf(-xs), dtype=np.float64)
        ratios = np.divide(num, den, out=np.full_like(num, np.inf), where=den > 0.0)
        detail = {"rv": rv, "balance_ratios": [float(r) for r in ratios]}
        if np.all(ratios > 100.0):
            return TailClassification("regularly-varying", alpha=rv["alpha"], case="i", detail=detail)
        if np.all(ratios < 0.01):
            return TailClassification("regularly-varying", alpha=rv["alpha"], case="ii", detail=detail)
        if ratios[0] > 0 and np.isfinite(ratios).all() and abs(ratios[1] / ratios[0] - 1.0) < 0.5:
            return TailClassification(
                "regularly-varying", alpha=rv["alpha"], case="iii",
                ratio_limit=float(ratios[1]), detail=detail,
            )
        return TailClassification("undecided", detail=detail)
    return TailClassification("undecided", detail={"ssv": ssv_detail})


# --------------------------------------------------------------------------
# ensembles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EnsembleSpec:
    """One seeded system: kernel, forcing, optional scale, solve options."""

    kernel: Kernel
    forcing: ForcingGenerator
    horizon: int
    xi: float = 1.0
    log_domain: bool = False
    scaling: ScalingModel = None
    thresholds: LimsupThresholds = None


STATISTICS = (
    "limsup_ratio",
    "log_growth_rate",
    "log_log_exponent",
    "cesaro_limit",
    "phi_average",
)


@dataclass(frozen=True)
class StatisticSpec:
    """Named per-path statistic with its pre-registered acceptance band."""

    name: str
    band: tuple
    series: str = "solution"  # "solution" or "forcing"
    phi: ConvexFunctional = None
    burn_in_fraction: float = 0.25

    def __post_init__(self):
        if self.name not in STATISTICS:
            raise ParameterError(f"unknown statistic {self.name!r}")
        if self.series not in ("solution", "forcing"):
            raise ParameterError("statistic series must be 'solution' or 'forcing'")
        if len(self.band) != 2 or not self.band[0] <= self.band[1]:
            raise ParameterError("band must be (low, high) with low <= high")


@dataclass(frozen=True)
class EnsembleResult:
    """Sorted per-path statistics and the fraction inside the band.

    Failed paths (overflow outside the log domain) are recorded as NaN at
    the end of ``per_path`` and count against the pass fraction.
    """

    per_path: tuple
    pass_fraction: float
    failures: int
    median: float


def _path_statistic(spec: StatisticSpec, x, forcing, system: EnsembleSpec) -> float:
    series = x if spec.series == "solution" else forcing
    if spec.name == "limsup_ratio":
        if system.scaling is None:
            raise InputError("limsup_ratio needs a scaling model")
        est = estimate_limsup(series, system.scaling, system.thresholds)
        return est.value
    if spec.name == "log_growth_rate":
        la = abs_log_series(series)
        return float(la.values[-1]) / la.end
    if spec.name == "log_log_exponent":
        la = abs_log_series(series)
        lo = max(series.start, 2, series.start + int(spec.burn_in_fraction * len(la)))
        win = la.window(lo, la.end)
        return float(np.max(win.values / np.log(win.indices())))
    if spec.name == "cesaro_limit":
        if system.scaling is None:
            raise InputError("cesaro_limit needs a scaling model")
        ratio = ratio_series(series, system.scaling.a)
        return float(time_average(ratio).values[-1])
    if spec.name == "phi_average":
        phi = spec.phi or make_phi("power", p=2.0)
        if isinstance(series, LogTrajectory):
            series = series.to_plain()
        return float(np.mean(phi(np.abs(series.values))))
    raise ParameterError(f"unknown statistic {spec.name!r}")


def ensemble_verify(system: EnsembleSpec, paths: int, statistic: StatisticSpec) -> EnsembleResult:
    """Run seeded independent paths and score a statistic against a band.

    Path p draws from the stream spawned for (master seed, p); aggregation
    is order independent and the per-path list is reported sorted.
    """
    if paths < 1:
        raise InputError("need at least one path")
    children = np.random.SeedSequence(system.forcing.seed).spawn(paths)
    values = []
    failures = 0
    for child in children:
        rng = np.random.Generator(np.random.Philox(child))
        try:
            forcing = generate(system.forcing, system.horizon,
                               log_domain=system.log_domain, rng=rng)
            x = solve_linear(system.kernel, forcing, system.xi, system.horizon,
                             log_domain=system.log_domain)
            values.append(float(_path_statistic(statistic, x, forcing, system)))
        except (TrajectoryOverflowError, UndefinedRatioError, InputError) as err:
            failures += 1
            values.append(float("nan"))
    arr = np.asarray(values)
    finite = arr[np.isfinite(arr)]
    lo, hi = statistic.band
    in_band = int(np.count_nonzero((finite >= lo) & (finite <= hi)))
    ordered = tuple(sorted(finite)) + (float("nan"),) * (paths - finite.size)
    return EnsembleResult(
        per_path=ordered,
        pass_fraction=in_band / paths,
        failures=failures,
        median=float(np.median(finite)) if finite.size else float("nan"),
    )
