"""Experiment drivers confronting samples with exact laws and bounds.

Every run_* function is a pure function of its config and seed: trials draw
from per-trial streams derived from the config seed, and aggregation is
order-fixed, so reruns (serial or parallel) reproduce identical tables.
"""

from __future__ import annotations

import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.special import gammaincc

from .analytics import ExactDistribution, beta_product_survival, c_star, chernoff_record_tail, mu
from .model import RbParams
from .samplers import (
    RandomSource,
    sample_height_only,
    sample_left_profile_matrix,
    sample_record_count,
)

CHI_SQUARE_MIN_EXPECTED = 5.0
DKW_ALPHA = 1e-3


def parse_theta_value(text: str) -> float:
    """Parse a theta literal: a decimal string or a rational like '3/2'."""
    text = text.strip()
    if "/" in text:
        return float(Fraction(text))
    return float(text)


def resolve_theta(theta_spec, n: int) -> float:
    """Resolve a theta specification at size n.

    Accepts a plain number, a numeric string (including 'p/q'), or a tag:
    ``constant:X`` for theta = X, ``linear:A`` for theta = A * n, and
    ``power:P`` for theta = n ** P.
    """
    if isinstance(theta_spec, (int, float)):
        return float(theta_spec)
    text = str(theta_spec).strip()
    if ":" in text:
        tag, _, arg = text.partition(":")
        value = parse_theta_value(arg)
        if tag == "constant":
            return value
        if tag == "linear":
            return value * n
        if tag == "power":
            return float(n) ** value
        raise ValueError(f"unknown theta spec tag {tag!r}")
    return parse_theta_value(text)


@dataclass(frozen=True)
class ExperimentConfig:
    """Shared experiment inputs; theta_spec is resolved per n."""

    n_values: tuple[int, ...]
    theta_spec: object
    trials: int
    seed: int = 0
    tolerances: Mapping[str, float] | None = None

    def __post_init__(self):
        n_values = tuple(int(n) for n in self.n_values)
        object.__setattr__(self, "n_values", n_values)
        if not n_values:
            raise ValueError("n_values must be non-empty")
        if any(b <= a for a, b in zip(n_values, n_values[1:])):
            raise ValueError("n_values must be strictly increasing")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")

    def theta_for(self, n: int) -> float:
        return resolve_theta(self.theta_spec, n)

    def tolerance(self, key: str, default: float) -> float:
        if self.tolerances and key in self.tolerances:
            return float(self.tolerances[key])
        return default


@dataclass(frozen=True)
class TrialSummary:
    """Aggregated height/record statistics for one (n, theta) cell."""

    n: int
    theta: float
    trials: int
    mean_height: float
    sd_height: float
    mean_records: float
    sd_records: float
    ratio_height_norm: float
    ratio_records_mu: float
    seed: int


@dataclass(frozen=True)
class RecordConcentrationRow:
    n: int
    theta: float
    trials: int
    epsilon: float
    mu: float
    mean_records: float
    sd_records: float
    freq_beyond: float
    bound_upper: float
    bound_lower: float
    bound_total: float
    binom_se: float
    passed: bool
    seed: int


@dataclass(frozen=True)
class DominanceRow:
    j: int
    n: int
    theta: float
    trials: int
    grid_size: int
    max_excess: float
    dkw_band: float
    passed: bool
    seed: int


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    p_value: float
    dof: int
    cells: int


def dkw_epsilon(trials: int, alpha: float = DKW_ALPHA) -> float:
    """Uniform empirical-CDF deviation with failure probability alpha."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * trials))


def height_normalizer(n: int, theta: float) -> float:
    """The height scale max(c_star * log n, mu(n, theta))."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return max(c_star() * math.log(n), mu(n, theta))


def _stream_index(n_index: int, trial: int) -> int:
    return (n_index << 32) | trial


def _height_block(args):
    """Trials [lo, hi) of sample_height_only for one (n, theta) cell."""
    n, theta, seed, n_index, lo, hi = args
    params = RbParams(n, theta)
    heights = []
    records = []
    for trial in range(lo, hi):
        rng = RandomSource(seed, _stream_index(n_index, trial))
        sample = sample_height_only(params, rng)
        if sample.height < sample.records - 1:
            raise AssertionError(
                f"height {sample.height} below records - 1 at n={n}, theta={theta}, trial={trial}"
            )
        heights.append(sample.height)
        records.append(sample.records)
    return lo, heights, records


def _collect_height_trials(n, theta, trials, seed, n_index, threads):
    if threads <= 1:
        _, heights, records = _height_block((n, theta, seed, n_index, 0, trials))
        return np.asarray(heights), np.asarray(records)
    chunk = max(1, -(-trials // (threads * 4)))
    blocks = [
        (n, theta, seed, n_index, lo, min(lo + chunk, trials))
        for lo in range(0, trials, chunk)
    ]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        results = sorted(pool.map(_height_block, blocks), key=lambda item: item[0])
    heights = [h for _, hs, _ in results for h in hs]
    records = [r for _, _, rs in results for r in rs]
    return np.asarray(heights), np.asarray(records)


def _mean_sd(values: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(values))
    sd = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return mean, sd


def run_height_ratio(
    config: ExperimentConfig, threads: int = 1, progress=None
) -> list[TrialSummary]:
    """Sample heights per n and report means, sds, and normalized ratios.

    The ratio column divides by max(c_star * log n, mu(n, theta)); first and
    second moments of the ratio follow from (mean, sd) since the normalizer
    is a constant for fixed n. Every sample is hard-checked against
    height >= records - 1.
    """
    rows = []
    for n_index, n in enumerate(config.n_values):
        theta = config.theta_for(n)
        heights, records = _collect_height_trials(
            n, theta, config.trials, config.seed, n_index, threads
        )
        mean_h, sd_h = _mean_sd(heights)
        mean_r, sd_r = _mean_sd(records)
        norm = height_normalizer(n, theta) if n >= 1 else 0.0
        m = mu(n, theta)
        rows.append(
            TrialSummary(
                n=n,
                theta=theta,
                trials=config.trials,
                mean_height=mean_h,
                sd_height=sd_h,
                mean_records=mean_r,
                sd_records=sd_r,
                ratio_height_norm=mean_h / norm if norm > 0.0 else math.nan,
                ratio_records_mu=mean_r / m if m > 0.0 else math.nan,
                seed=config.seed,
            )
        )
        if progress is not None:
            progress(
                f"height-ratio n={n} theta={theta:g} mean_h={mean_h:.3f} "
                f"ratio={rows[-1].ratio_height_norm:.4f}"
            )
    return rows


def run_record_concentration(
    config: ExperimentConfig, epsilon: float, progress=None
) -> list[RecordConcentrationRow]:
    """Compare the deviation frequency of record counts with its bound.

    For each n the empirical frequency of |records / mu - 1| > epsilon over
    the trials is put against the sum of the upper and lower exponential
    bounds; a row passes when the frequency is at most bound plus three
    binomial standard errors (multiplier overridable via tolerances).
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    multiplier = config.tolerance("se_multiplier", 3.0)
    rows = []
    for n_index, n in enumerate(config.n_values):
        theta = config.theta_for(n)
        params = RbParams(n, theta)
        m = mu(n, theta)
        if m <= 0.0:
            raise ValueError(f"mu(n, theta) must be positive, got {m} at n={n}")
        counts = np.empty(config.trials, dtype=np.int64)
        for trial in range(config.trials):
            rng = RandomSource(config.seed, _stream_index(n_index, trial))
            counts[trial] = sample_record_count(params, rng)
        beyond = np.abs(counts / m - 1.0) > epsilon
        freq = float(np.mean(beyond))
        upper = chernoff_record_tail(params, epsilon, "upper")
        lower = chernoff_record_tail(params, epsilon, "lower")
        total = min(1.0, upper + lower)
        se = math.sqrt(freq * (1.0 - freq) / config.trials)
        rows.append(
            RecordConcentrationRow(
                n=n,
                theta=theta,
                trials=config.trials,
                epsilon=epsilon,
                mu=m,
                mean_records=float(np.mean(counts)),
                sd_records=float(np.std(counts, ddof=1)) if config.trials > 1 else 0.0,
                freq_beyond=freq,
                bound_upper=upper,
                bound_lower=lower,
                bound_total=total,
                binom_se=se,
                passed=bool(freq <= total + multiplier * se),
                seed=config.seed,
            )
        )
        if progress is not None:
            progress(
                f"record-concentration n={n} theta={theta:g} freq={freq:.5f} "
                f"bound={total:.5f}"
            )
    return rows


def _dominance_grid(n: int, j: int, grid_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Threshold grid t = j + n * c with c log-spaced in (0, 1]."""
    cs = np.logspace(-6.0, 0.0, grid_size)
    return cs, j + n * cs


def run_dominance_check(
    params: RbParams,
    j_values: Sequence[int],
    trials: int,
    seed: int,
    grid_size: int = 50,
    progress=None,
) -> list[DominanceRow]:
    """Check that sampled profile entries stay below their dominating law.

    For each j, the empirical survival of the j-th left-subtree size is
    compared on a threshold grid with the survival of j + n * prod(B_i);
    dominance is asserted up to twice the DKW band for the trial count.
    """
    if params.theta <= 0.0:
        raise ValueError("theta must be positive")
    j_values = sorted(set(int(j) for j in j_values))
    if not j_values or j_values[0] < 0:
        raise ValueError("j_values must be non-empty and non-negative")
    rng = RandomSource(seed, 0)
    profile = sample_left_profile_matrix(params, trials, j_values[-1], rng)
    band = dkw_epsilon(trials)
    rows = []
    for j in j_values:
        cs, thresholds = _dominance_grid(params.n, j, grid_size)
        entries = profile[:, j]
        empirical = (entries[None, :] > thresholds[:, None]).mean(axis=1)
        dominating = np.array(
            [
                0.0 if c >= 1.0 else beta_product_survival(params.theta, j, float(c))
                for c in cs
            ]
        )
        max_excess = float(np.max(empirical - dominating))
        rows.append(
            DominanceRow(
                j=j,
                n=params.n,
                theta=params.theta,
                trials=trials,
                grid_size=grid_size,
                max_excess=max_excess,
                dkw_band=band,
                passed=bool(max_excess <= 2.0 * band),
                seed=seed,
            )
        )
        if progress is not None:
            progress(f"dominance j={j} max_excess={max_excess:.5f} band={band:.5f}")
    return rows


def chi_square_gof(observed: Mapping, expected: ExactDistribution) -> ChiSquareResult:
    """Pearson goodness-of-fit of observed counts against an exact law.

    Cells are pooled in support order until each expected count reaches 5
    (a trailing remainder merges backwards). The p-value is the chi-square
    upper tail at cells - 1 degrees of freedom, computed through the
    regularized incomplete gamma.
    """
    if not expected.support:
        raise ValueError("expected distribution has empty support")
    unknown = set(observed) - set(expected.support)
    if unknown:
        raise ValueError(f"observed outcomes outside expected support: {sorted(unknown)!r}")
    total = sum(observed.values())
    if total <= 0:
        raise ValueError("observed counts must be positive")
    cells: list[tuple[float, float]] = []
    acc_obs = 0.0
    acc_prob = 0.0
    for key, prob in zip(expected.support, expected.probs):
        acc_obs += observed.get(key, 0)
        acc_prob += prob
        if acc_prob * total >= CHI_SQUARE_MIN_EXPECTED:
            cells.append((acc_obs, acc_prob))
            acc_obs = 0.0
            acc_prob = 0.0
    if acc_prob > 0.0:
        if cells:
            last_obs, last_prob = cells[-1]
            cells[-1] = (last_obs + acc_obs, last_prob + acc_prob)
        else:
            cells.append((acc_obs, acc_prob))
    if len(cells) < 2:
        raise ValueError("only one cell after pooling; test is degenerate")
    statistic = math.fsum(
        (obs - total * prob) ** 2 / (total * prob) for obs, prob in cells
    )
    dof = len(cells) - 1
    p_value = float(gammaincc(dof / 2.0, statistic / 2.0))
    return ChiSquareResult(statistic=statistic, p_value=p_value, dof=dof, cells=len(cells))


def log_to_stderr(message: str) -> None:
    print(message, file=sys.stderr)
