"""Parameter estimation: Anderson-Darling distance, its rank-weighted
variants with subrange support, derivative-free fitting, the Hill and
normalized-spacings tail estimators, and the three-step composite pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import genpareto

from .core_dist import (
    PARAM_NAMES,
    DistributionSpec,
    Family,
    OrderedSample,
    cdf,
    spec_from_dict,
    survival,
)
from .tail_model import (
    AdjustedModel,
    LowerAdjustment,
    UpperAdjustment,
    lower_gpd_adjuster,
)


class LogDomainError(ValueError):
    """Model CDF hit 0 or 1 at an observation; carries the offending rank."""

    def __init__(self, rank: int):
        super().__init__(f"model CDF is degenerate at rank {rank}")
        self.rank = rank


class FitFailedError(RuntimeError):
    """All optimizer restarts failed."""


class Weighting(str, Enum):
    UNWEIGHTED = "unweighted"
    NORMALIZED = "normalized"
    SQRT_PREFERENCE = "sqrt"


@dataclass(frozen=True)
class MadConfig:
    weighting: Weighting = Weighting.NORMALIZED
    rank_range: Optional[tuple] = None  # inclusive (i_lo, i_hi), 1-based
    bounds: Optional[dict] = None  # natural-space bounds per free parameter
    xtol: float = 1e-8
    max_evals: int = 5000
    restarts: int = 5

    def resolve_ranks(self, n: int) -> tuple:
        if self.rank_range is None:
            return 1, n
        i_lo, i_hi = self.rank_range
        if not (1 <= i_lo <= i_hi <= n):
            raise ValueError(f"rank range {self.rank_range} invalid for n={n}")
        return int(i_lo), int(i_hi)


@dataclass(frozen=True)
class FitResult:
    theta: dict
    objective_value: float
    converged: bool
    evaluations: int
    config: MadConfig

    def as_dict(self) -> dict:
        return {
            "theta": dict(self.theta),
            "objective_value": self.objective_value,
            "converged": self.converged,
            "evaluations": self.evaluations,
            "weighting": self.config.weighting.value,
            "rank_range": list(self.config.rank_range) if self.config.rank_range else None,
        }


def _cdf_values(sample: OrderedSample, model) -> np.ndarray:
    if isinstance(model, DistributionSpec):
        f = np.asarray(cdf(model, sample.values))
    elif isinstance(model, AdjustedModel):
        from .tail_model import adjusted_cdf

        f = np.asarray(adjusted_cdf(model, sample.values))
    else:
        f = np.asarray(model(sample.values))
    bad = np.nonzero((f <= 0.0) | (f >= 1.0))[0]
    if bad.size:
        raise LogDomainError(int(bad[0]) + 1)
    return f


def ad_statistic(sample: OrderedSample, model) -> float:
    """Anderson-Darling statistic with the standard 1/n normalization."""
    f = _cdf_values(sample, model)
    n = sample.n
    i = np.arange(1, n + 1)
    s = np.sum((2 * i - 1) * np.log(f) + (2 * (n - i) + 1) * np.log1p(-f))
    return float(-n - s / n)


def mad_weights(weighting: Weighting, ranks: np.ndarray, n: int) -> np.ndarray:
    """Rank weights for the modified objective; None-like for unweighted."""
    p = ranks / (n + 1)
    denom = ranks * np.log(p) + (n - ranks + 1) * np.log1p(-p)
    if weighting == Weighting.NORMALIZED:
        return 1.0 / denom
    if weighting == Weighting.SQRT_PREFERENCE:
        return np.sqrt(ranks) / denom
    raise ValueError("unweighted mode has no rank weights")


def mad_objective(sample: OrderedSample, model, config: MadConfig) -> float:
    """Fit objective over the configured rank range.

    Unweighted mode is the Bernoulli mixed likelihood (to be maximized);
    the weighted modes normalize each summand at the order-statistic
    expectation F(x_i) = i/(n+1) and are minimized, with value = rank count
    at a perfect EDF match.
    """
    n = sample.n
    i_lo, i_hi = config.resolve_ranks(n)
    f = _cdf_values(sample, model)[i_lo - 1 : i_hi]
    ranks = np.arange(i_lo, i_hi + 1, dtype=float)
    if config.weighting == Weighting.UNWEIGHTED:
        s = (ranks - 0.5) * np.log(f) + (n - ranks + 0.5) * np.log1p(-f)
        return float(np.sum(s) / n)
    w = mad_weights(config.weighting, ranks, n)
    s = ranks * np.log(f) + (n - ranks + 1) * np.log1p(-f)
    return float(np.sum(w * s))


def _objective_direction(weighting: Weighting) -> float:
    # internal optimizer always minimizes; unweighted likelihood flips sign
    return -1.0 if weighting == Weighting.UNWEIGHTED else 1.0


# ---------------------------------------------------------------------------
# derivative-free fitting

_LOG_PARAMS = {"alpha", "sigma", "beta", "sigma1", "sigma2", "sigma3"}


def _transform(name: str):
    if name in _LOG_PARAMS:
        return np.log, np.exp
    if name == "p_upper":
        def logit(p):
            p = min(max(p, 1e-9), 1 - 1e-9)
            return np.log(p / (1 - p))

        def expit(t):
            return 1.0 / (1.0 + np.exp(-t))

        return logit, expit
    return (lambda v: v), (lambda v: v)


_PENALTY = 1e12


def _minimize_restarts(
    fn: Callable, x0: np.ndarray, bounds_t, config: MadConfig
) -> tuple:
    """Nelder-Mead with deterministic perturbed restarts in transformed space.

    Returns (best_x, best_f, converged, total_evals).
    """
    rng = np.random.default_rng(20240817)
    offsets = [np.zeros_like(x0)] + [
        0.35 * rng.standard_normal(x0.size) for _ in range(config.restarts - 1)
    ]
    results = []
    evals = 0
    for delta in offsets:
        start = x0 + delta
        if bounds_t is not None:
            start = np.clip(start, [b[0] for b in bounds_t], [b[1] for b in bounds_t])
        res = minimize(
            fn,
            start,
            method="Nelder-Mead",
            bounds=bounds_t,
            options={
                "xatol": config.xtol,
                "fatol": config.xtol,
                "maxfev": config.max_evals,
                "adaptive": True,
            },
        )
        evals += res.nfev
        if np.isfinite(res.fun) and res.fun < _PENALTY / 2:
            results.append((res.fun, res.x))
    if not results:
        raise FitFailedError("every optimizer restart ended in the penalty region")
    results.sort(key=lambda t: t[0])
    best_f, best_x = results[0]
    converged = False
    if len(results) >= 2:
        f2, x2 = results[1]
        close_f = abs(best_f - f2) <= 1e-6 * max(1.0, abs(best_f))
        close_x = np.max(np.abs(best_x - x2)) < 1e-3
        converged = bool(close_f or close_x)
    return best_x, best_f, converged, evals


def _fit_generic(
    sample: OrderedSample,
    model_builder: Callable,  # theta dict -> DistributionSpec/AdjustedModel/callable
    free_names: Sequence[str],
    x0_natural: dict,
    config: MadConfig,
) -> FitResult:
    fwd = {nm: _transform(nm)[0] for nm in free_names}
    inv = {nm: _transform(nm)[1] for nm in free_names}

    def to_theta(x: np.ndarray) -> dict:
        return {nm: float(inv[nm](x[j])) for j, nm in enumerate(free_names)}

    direction = _objective_direction(config.weighting)

    def objective(x: np.ndarray) -> float:
        try:
            model = model_builder(to_theta(x))
            return direction * mad_objective(sample, model, config)
        except (ValueError, ArithmeticError, OverflowError):
            return _PENALTY

    x0 = np.array([fwd[nm](x0_natural[nm]) for nm in free_names])
    bounds_t = None
    if config.bounds:
        bounds_t = []
        for j, nm in enumerate(free_names):
            if nm in config.bounds:
                lo, hi = config.bounds[nm]
                bounds_t.append((fwd[nm](lo), fwd[nm](hi)))
            else:
                bounds_t.append((-np.inf, np.inf))
    best_x, best_f, converged, evals = _minimize_restarts(objective, x0, bounds_t, config)
    theta = to_theta(best_x)
    return FitResult(theta, direction * best_f, converged, evals, config)


def _default_start(
    sample: OrderedSample, family: Family, fixed: dict, free: Sequence[str]
) -> dict:
    v = sample.values
    start = {}
    if family == Family.GPD:
        loc = fixed.get("loc", 0.0)
        start["gamma"] = 0.5
        start["sigma"] = max(float(np.median(v - loc)), 1e-12)
    elif family == Family.PARETO:
        sigma = fixed.get("sigma", float(v[0]) * 0.999)
        logs = np.log(np.maximum(v / sigma, 1.0 + 1e-12))
        start["alpha"] = 1.0 / max(float(np.mean(logs)), 1e-6)
        start["sigma"] = sigma
    elif family == Family.EXPONENTIAL:
        start["sigma"] = float(np.mean(v))
    elif family == Family.SHIFTED_WEIBULL:
        shift = fixed.get("shift", 0.0)
        start["shift"] = shift
        start["sigma"] = max(float(np.mean(v - shift)), 1e-12)
        start["beta"] = 1.0
    else:
        raise ValueError(f"no MAD fitting support for family {family}")
    return {nm: start[nm] for nm in free}


def fit_mad(
    sample: OrderedSample,
    family: Family,
    fixed: Optional[dict] = None,
    config: MadConfig = MadConfig(),
) -> FitResult:
    """Fit a single family by minimum-AD distance over the configured
    rank range; parameters in `fixed` are held constant."""
    fixed = dict(fixed or {})
    if family == Family.GPD:
        # the location is a known threshold, never a fitted quantity
        fixed.setdefault("loc", 0.0)
    free = [nm for nm in PARAM_NAMES[family] if nm not in fixed]
    if not free:
        raise ValueError("no free parameters to fit")
    i_lo, i_hi = config.resolve_ranks(sample.n)
    if (i_hi - i_lo + 1) < len(free) + 1:
        raise ValueError("rank range too small for the number of free parameters")

    def builder(theta: dict) -> DistributionSpec:
        return spec_from_dict(family, {**fixed, **theta})

    x0 = _default_start(sample, family, fixed, free)
    return _fit_generic(sample, builder, free, x0, config)


def fit_gpd_ml(sample: OrderedSample, loc: float = 0.0) -> dict:
    """Maximum-likelihood GPD fit of excesses over `loc` (scipy)."""
    excess = sample.values - loc
    if np.any(excess <= 0):
        raise ValueError("all observations must exceed the location")
    c, _, scale = genpareto.fit(excess, floc=0.0)
    return {"gamma": float(c), "sigma": float(scale)}


# ---------------------------------------------------------------------------
# tail estimators

def hill_estimate(sample: OrderedSample, k: int) -> dict:
    """Hill estimate of the extreme value index from the top k order
    statistics, with threshold x_{n-k}."""
    n = sample.n
    if not (1 <= k <= n - 1):
        raise ValueError(f"k={k} out of range [1, {n - 1}]")
    threshold = float(sample.values[n - k - 1])
    if threshold <= 0:
        raise ValueError("threshold order statistic must be positive")
    top = sample.values[n - k :]
    gamma = float(np.mean(np.log(top / threshold)))
    return {"gamma_hat": gamma, "se": gamma / np.sqrt(k), "k": k, "threshold": threshold}


def spacings_estimate(sample: OrderedSample, value_range: tuple) -> dict:
    """Extreme value index from normalized spacings of the log-transformed
    ordered sample, restricted to observations inside `value_range`."""
    a, b = value_range
    v = sample.values
    n = sample.n
    in_range = (v >= a) & (v <= b)
    if int(np.sum(in_range)) < 3:
        raise ValueError("need at least 3 observations inside the value range")
    y = np.log(v)
    # spacings between consecutive order statistics that both fall in range
    idx = np.arange(2, n + 1)  # global rank of the upper member
    usable = in_range[1:] & in_range[:-1]
    d = (n - idx[usable] + 1) * (y[1:][usable] - y[:-1][usable])
    if d.size < 2 or np.all(d == 0):
        raise ValueError("degenerate spacings (ties) in the selected range")
    gamma = float(np.mean(d))
    return {"gamma_hat": gamma, "se": gamma / np.sqrt(d.size), "count": int(d.size)}


# ---------------------------------------------------------------------------
# three-step pipeline

@dataclass(frozen=True)
class PipelinePlan:
    base_family: Family
    base_fixed: dict = field(default_factory=dict)
    x_lower: Optional[float] = None
    x_upper: Optional[float] = None
    fit_upper: bool = True
    fit_lower: bool = True
    base_config: MadConfig = MadConfig()
    upper_config: MadConfig = MadConfig(bounds={"beta": (0.5, 100.0)})
    lower_config: MadConfig = MadConfig(bounds={"gamma_adj_l": (-5.0, -0.01)})


@dataclass(frozen=True)
class PipelineResult:
    model: AdjustedModel
    base_fit: FitResult
    upper_fit: Optional[FitResult]
    lower_fit: Optional[FitResult]
    warnings: tuple = ()


def _conditional_upper_cdf(base, adjuster_builder, x_upper):
    """Conditional CDF of the upper-adjusted law above x_upper."""

    def make(theta):
        adjuster = adjuster_builder(theta)
        p = theta["p_upper"]
        s_at = float(survival(base, x_upper))

        def cond_cdf(x):
            sb = np.asarray(survival(base, x))
            sa = np.asarray(survival(adjuster, x))
            s_up = sb * (p * sa + (1.0 - p))
            return 1.0 - s_up / s_at

        return cond_cdf

    return make


def fit_pipeline(sample: OrderedSample, plan: PipelinePlan) -> PipelineResult:
    """Three-step composite fit: base on the middle range, upper adjuster and
    transition probability on the tail, lower adjuster on the head."""
    v = sample.values
    n = sample.n
    warnings = []
    x_lo = plan.x_lower if plan.x_lower is not None else -np.inf
    x_up = plan.x_upper if plan.x_upper is not None else np.inf

    # step 1: base over global ranks whose values fall in [x_lower, x_upper]
    in_mid = (v >= x_lo) & (v <= x_up)
    mid_ranks = np.nonzero(in_mid)[0] + 1
    if mid_ranks.size == 0:
        raise ValueError("no observations in the base fitting range")
    cfg1 = plan.base_config
    rlo, rhi = int(mid_ranks[0]), int(mid_ranks[-1])
    if cfg1.rank_range is not None:
        rlo = max(rlo, cfg1.rank_range[0])
        rhi = min(rhi, cfg1.rank_range[1])
    cfg1 = replace(cfg1, rank_range=(rlo, rhi))
    base_fixed = dict(plan.base_fixed)
    if plan.base_family == Family.GPD:
        base_fixed.setdefault("loc", 0.0)
    base_fit = fit_mad(sample, plan.base_family, base_fixed, cfg1)
    base = spec_from_dict(plan.base_family, {**base_fixed, **base_fit.theta})

    # step 2: upper adjuster + transition probability on the tail subsample
    upper = None
    upper_fit = None
    if plan.fit_upper and plan.x_upper is not None:
        tail_values = v[v > plan.x_upper]
        if tail_values.size < 4:
            warnings.append("upper step skipped: too few tail observations")
        else:
            tail = OrderedSample.from_values(tail_values, label="upper tail")

            def adjuster_builder(theta):
                return spec_from_dict(
                    Family.SHIFTED_WEIBULL,
                    {
                        "shift": plan.x_upper,
                        "sigma": theta["sigma"],
                        "beta": theta["beta"],
                    },
                )

            builder = _conditional_upper_cdf(base, adjuster_builder, plan.x_upper)
            x0 = {
                "p_upper": 0.5,
                "beta": 2.0,
                "sigma": max(float(np.median(tail_values - plan.x_upper)), 1e-12),
            }
            upper_fit = _fit_generic(
                tail, builder, ["p_upper", "beta", "sigma"], x0, plan.upper_config
            )
            p_hat = upper_fit.theta["p_upper"]
            # boundary estimates are reported as exact 0/1
            if p_hat < 1e-3:
                p_hat = 0.0
            elif p_hat > 1.0 - 1e-3:
                p_hat = 1.0
            adjuster = spec_from_dict(
                Family.SHIFTED_WEIBULL,
                {
                    "shift": plan.x_upper,
                    "sigma": upper_fit.theta["sigma"],
                    "beta": upper_fit.theta["beta"],
                },
            )
            upper = UpperAdjustment(adjuster, p_hat, plan.x_upper)

    # step 3: lower adjuster (endpoint-pinned GPD) on the head subsample
    lower = None
    lower_fit = None
    if plan.fit_lower and plan.x_lower is not None:
        head_values = v[v < plan.x_lower]
        if head_values.size < 3:
            warnings.append("lower step skipped: too few head observations")
        else:
            head = OrderedSample.from_values(head_values, label="lower head")
            f_at = float(cdf(base, plan.x_lower))

            def lower_builder(theta):
                adjuster = lower_gpd_adjuster(theta["gamma_adj_l"], plan.x_lower)

                def cond_cdf(x):
                    return (
                        np.asarray(cdf(base, x)) * np.asarray(cdf(adjuster, x)) / f_at
                    )

                return cond_cdf

            lower_fit = _fit_generic(
                head, lower_builder, ["gamma_adj_l"], {"gamma_adj_l": -0.5},
                plan.lower_config,
            )
            lower = LowerAdjustment(
                lower_gpd_adjuster(lower_fit.theta["gamma_adj_l"], plan.x_lower),
                plan.x_lower,
            )

    model = AdjustedModel(base, upper, lower)
    return PipelineResult(model, base_fit, upper_fit, lower_fit, tuple(warnings))
