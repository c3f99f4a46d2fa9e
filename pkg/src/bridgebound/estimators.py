"""Barrier option estimators built on the path engine.

For a knock-out payoff V with discrete no-hit indicator I and accumulated
no-hit weight W, the crossing-corrected estimator is V * I * W.  Running it
with the lower-bound, independence, and upper-bound weights gives a bracket
[q_lower, q_upper] around the continuously monitored price with q_indep in
between; V * I alone is the discretely monitored estimator q_s.  Knock-in
prices come from in-out parity applied path-wise, V * (1 - I * W), which
swaps the roles of the two bounds.  A cash rebate R paid at maturity when
the option knocks out blends both legs: V * I * W + R_disc * (1 - I * W).

Per-path contributions are reduced chunk by chunk in a fixed order, so
results are bit-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtri

from .model import MarketModel, OptionSpec, validate
from .simulate import CHUNK, PathBatch, _compute_batch, _n_chunks, _plan

__all__ = [
    "EstimatorResult",
    "PointEstimate",
    "PricingReport",
    "price",
    "knock_in_price",
    "rebate_price",
    "path_contributions",
    "point_estimators",
    "confidence_interval",
    "discrete_barrier_interpolate",
]


@dataclass(frozen=True)
class EstimatorResult:
    """Monte Carlo mean and its standard error."""

    mean: float
    std_error: float
    n_paths: int


@dataclass(frozen=True)
class PointEstimate:
    """Midpoint of two estimators, with a combined error measure.

    ``std_error`` is half the bracket width plus half the two standard
    errors, so it covers both the statistical noise and the systematic
    spread between the bracketing estimators.
    """

    value: float
    std_error: float


@dataclass(frozen=True)
class PricingReport:
    """Full output of one pricing run.

    ``q_s`` is the discretely monitored estimator; q_lower / q_indep /
    q_upper bracket the continuously monitored price; ``q_exact`` is set
    only when at most one barrier event is active per interval, where the
    crossing probability needs no bound.  q0 / q1 / q2 are midpoints of
    (lower, upper), (lower, indep), (indep, upper).  ``ci`` is an outer
    confidence interval for the continuous price at level ``alpha``.
    """

    q_s: EstimatorResult
    q_lower: EstimatorResult
    q_indep: EstimatorResult
    q_upper: EstimatorResult
    q_exact: EstimatorResult | None
    q0: PointEstimate
    q1: PointEstimate
    q2: PointEstimate
    ci: tuple[float, float]
    alpha: float
    n_paths: int
    seed: int

    def to_dict(self) -> dict:
        """Plain-types view of the report, for JSON output."""
        out = {
            "n_paths": self.n_paths,
            "seed": self.seed,
            "alpha": self.alpha,
            "estimators": {},
            "point_estimates": {},
            "ci": [self.ci[0], self.ci[1]],
        }
        named = [
            ("q_s", self.q_s),
            ("q_lower", self.q_lower),
            ("q_indep", self.q_indep),
            ("q_upper", self.q_upper),
        ]
        if self.q_exact is not None:
            named.append(("q_exact", self.q_exact))
        for name, est in named:
            out["estimators"][name] = {
                "mean": est.mean,
                "std_error": est.std_error,
            }
        for name, pt in [("q0", self.q0), ("q1", self.q1), ("q2", self.q2)]:
            out["point_estimates"][name] = {
                "value": pt.value,
                "std_error": pt.std_error,
            }
        return out


def point_estimators(
    q_lower: EstimatorResult,
    q_indep: EstimatorResult,
    q_upper: EstimatorResult,
) -> tuple[PointEstimate, PointEstimate, PointEstimate]:
    """Midpoint estimates q0, q1, q2 from the three bracketing estimators."""

    def mid(lo: EstimatorResult, hi: EstimatorResult) -> PointEstimate:
        value = 0.5 * (lo.mean + hi.mean)
        spread = 0.5 * (hi.mean - lo.mean) + 0.5 * (hi.std_error + lo.std_error)
        return PointEstimate(value=value, std_error=spread)

    return mid(q_lower, q_upper), mid(q_lower, q_indep), mid(q_indep, q_upper)


def confidence_interval(
    q_lower: EstimatorResult,
    q_upper: EstimatorResult,
    alpha: float = 0.05,
) -> tuple[float, float]:
    """Outer interval [lower - z se, upper + z se] at two-sided level alpha.

    Covers the continuous price whenever each bound's own normal interval
    does, hence conservatively.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    z = ndtri(1.0 - alpha / 2.0)
    return (
        q_lower.mean - z * q_lower.std_error,
        q_upper.mean + z * q_upper.std_error,
    )


def discrete_barrier_interpolate(
    q_continuous: float, q_lowfreq: float, m_low: int, m_target: float
) -> float:
    """Approximate the price at ``m_target`` monitoring dates per interval.

    Uses the square-root correction q(M) ~ q_continuous + lam / sqrt(M)
    with lam calibrated from one low-frequency price at ``m_low`` dates.
    ``m_target`` may be ``math.inf``, returning the continuous price.
    """
    if m_low < 1:
        raise ValueError(f"m_low must be >= 1, got {m_low}")
    if not m_target >= 1:
        raise ValueError(f"m_target must be >= 1, got {m_target}")
    lam = (q_lowfreq - q_continuous) * math.sqrt(m_low)
    return q_continuous + lam / math.sqrt(m_target)


# One estimator's per-path contributions, as (name, array) pairs.
_Contribs = list[tuple[str, np.ndarray]]


def _knock_out_contribs(v: np.ndarray, batch: PathBatch, r_disc: float) -> _Contribs:
    alive = batch.alive
    surv_s = alive.astype(float)
    out = []
    for name, w in _weight_columns(batch):
        surv = alive * w if w is not None else surv_s
        c = v * surv
        if r_disc != 0.0:
            c = c + r_disc * (1.0 - surv)
        out.append((name, c))
    return out


def _knock_in_contribs(v: np.ndarray, batch: PathBatch, r_disc: float) -> _Contribs:
    # In-out parity per path; the lower no-hit bound yields the UPPER
    # knock-in estimate and vice versa, so swap the reported roles.
    del r_disc
    alive = batch.alive
    swap = {"q_lower": "q_upper", "q_upper": "q_lower"}
    out = []
    for name, w in _weight_columns(batch):
        surv = alive * w if w is not None else alive.astype(float)
        out.append((swap.get(name, name), v * (1.0 - surv)))
    return out


def _weight_columns(batch: PathBatch) -> list[tuple[str, np.ndarray | None]]:
    cols = [
        ("q_s", None),
        ("q_lower", batch.w_lower),
        ("q_indep", batch.w_indep),
        ("q_upper", batch.w_upper),
    ]
    if batch.w_exact is not None:
        cols.append(("q_exact", batch.w_exact))
    return cols


def _reduce(
    model: MarketModel,
    spec: OptionSpec,
    n_paths: int,
    seed: int,
    workers: int,
    transform: Callable[[np.ndarray, PathBatch, float], _Contribs],
    r_disc: float,
) -> dict[str, EstimatorResult]:
    plan = _plan(model)
    discount = math.exp(-model.rate * model.grid.maturity)
    n_chunks = _n_chunks(n_paths)

    def partials(chunk_index: int) -> dict[str, tuple[float, float]]:
        rows = min(CHUNK, n_paths - chunk_index * CHUNK)
        batch = _compute_batch(plan, seed, chunk_index, rows)
        v = discount * spec.terminal_payoff(batch.terminal)
        acc = {}
        for name, c in transform(v, batch, r_disc):
            acc[name] = (float(np.sum(c)), float(np.sum(c * c)))
        return acc

    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # map() preserves chunk order, so the reduction below is the
            # same floating-point sum regardless of worker count.
            per_chunk = list(pool.map(partials, range(n_chunks)))
    else:
        per_chunk = [partials(c) for c in range(n_chunks)]

    names = list(per_chunk[0])
    results = {}
    for name in names:
        total = 0.0
        total_sq = 0.0
        for acc in per_chunk:
            s, s2 = acc[name]
            total += s
            total_sq += s2
        mean = total / n_paths
        var_num = max(total_sq - total * total / n_paths, 0.0)
        se = math.sqrt(var_num / (n_paths - 1) / n_paths)
        results[name] = EstimatorResult(mean=mean, std_error=se, n_paths=n_paths)
    return results


def _assemble(
    results: dict[str, EstimatorResult],
    alpha: float,
    n_paths: int,
    seed: int,
) -> PricingReport:
    q_lower = results["q_lower"]
    q_indep = results["q_indep"]
    q_upper = results["q_upper"]
    q0, q1, q2 = point_estimators(q_lower, q_indep, q_upper)
    return PricingReport(
        q_s=results["q_s"],
        q_lower=q_lower,
        q_indep=q_indep,
        q_upper=q_upper,
        q_exact=results.get("q_exact"),
        q0=q0,
        q1=q1,
        q2=q2,
        ci=confidence_interval(q_lower, q_upper, alpha),
        alpha=alpha,
        n_paths=n_paths,
        seed=seed,
    )


def _check_run_args(n_paths: int, alpha: float, workers: int) -> None:
    if n_paths < 2:
        raise ValueError(f"n_paths must be >= 2, got {n_paths}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")


def price(
    model: MarketModel,
    spec: OptionSpec,
    n_paths: int,
    seed: int = 0,
    alpha: float = 0.05,
    workers: int = 1,
) -> PricingReport:
    """Price the option under the model with all estimators in one pass.

    Dispatches on ``spec.knock``; a nonzero ``spec.rebate`` is paid at
    maturity when a knock-out option is knocked out.

    Parameters
    ----------
    model, spec :
        Market model and option contract.  Both are validated first.
    n_paths : int
        Number of Monte Carlo paths, at least 2.
    seed : int
        Stream key, in [0, 2**64).  Same seed, same answer, any workers.
    alpha : float
        Two-sided level of the outer confidence interval.
    workers : int
        Thread count for chunk evaluation.

    Returns
    -------
    PricingReport
    """
    _check_run_args(n_paths, alpha, workers)
    validate(model, spec).raise_if_invalid()
    if spec.knock == "in":
        if spec.rebate != 0.0:
            raise ValueError("rebate is only supported for knock-out options")
        transform = _knock_in_contribs
        r_disc = 0.0
    else:
        transform = _knock_out_contribs
        r_disc = spec.rebate * math.exp(-model.rate * model.grid.maturity)
    results = _reduce(model, spec, n_paths, seed, workers, transform, r_disc)
    return _assemble(results, alpha, n_paths, seed)


def knock_in_price(
    model: MarketModel,
    spec: OptionSpec,
    n_paths: int,
    seed: int = 0,
    alpha: float = 0.05,
    workers: int = 1,
) -> PricingReport:
    """Price a knock-in option via path-wise in-out parity.

    ``spec.knock`` may be either value; the knock-in interpretation is
    forced.  Rebates are not supported here.
    """
    _check_run_args(n_paths, alpha, workers)
    validate(model, spec).raise_if_invalid()
    if spec.rebate != 0.0:
        raise ValueError("rebate is only supported for knock-out options")
    results = _reduce(model, spec, n_paths, seed, workers, _knock_in_contribs, 0.0)
    return _assemble(results, alpha, n_paths, seed)


def rebate_price(
    model: MarketModel,
    spec: OptionSpec,
    n_paths: int,
    rebate: float | None = None,
    seed: int = 0,
    alpha: float = 0.05,
    workers: int = 1,
) -> PricingReport:
    """Knock-out price with a cash rebate paid at maturity on knock-out.

    ``rebate`` overrides ``spec.rebate`` when given.  With a zero rebate
    this is ``price`` exactly, bit for bit.
    """
    _check_run_args(n_paths, alpha, workers)
    validate(model, spec).raise_if_invalid()
    if spec.knock == "in":
        raise ValueError("rebate is only supported for knock-out options")
    r = spec.rebate if rebate is None else rebate
    r_disc = r * math.exp(-model.rate * model.grid.maturity)
    results = _reduce(model, spec, n_paths, seed, workers, _knock_out_contribs, r_disc)
    return _assemble(results, alpha, n_paths, seed)


def path_contributions(
    model: MarketModel,
    spec: OptionSpec,
    n_paths: int,
    seed: int = 0,
) -> dict[str, np.ndarray]:
    """Per-path diagnostics: discounted payoff, indicator, and weights.

    Returns arrays of length ``n_paths`` keyed by ``payoff``, ``alive``,
    ``w_lower``, ``w_indep``, ``w_upper``, and ``w_exact`` when available.
    Intended for inspection and tests, not for pricing at scale.
    """
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    validate(model, spec).raise_if_invalid()
    plan = _plan(model)
    discount = math.exp(-model.rate * model.grid.maturity)
    parts: dict[str, list[np.ndarray]] = {}
    for chunk_index in range(_n_chunks(n_paths)):
        rows = min(CHUNK, n_paths - chunk_index * CHUNK)
        batch = _compute_batch(plan, seed, chunk_index, rows)
        cols = {
            "payoff": discount * spec.terminal_payoff(batch.terminal),
            "alive": batch.alive,
            "w_lower": batch.w_lower,
            "w_indep": batch.w_indep,
            "w_upper": batch.w_upper,
        }
        if batch.w_exact is not None:
            cols["w_exact"] = batch.w_exact
        for name, arr in cols.items():
            parts.setdefault(name, []).append(arr)
    return {name: np.concatenate(arrs) for name, arrs in parts.items()}
