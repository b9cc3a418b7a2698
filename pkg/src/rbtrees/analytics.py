"""Closed-form laws, tail bounds, and a brute-force enumeration oracle.

Everything here is deterministic. The enumeration oracle iterates all n!
permutations (capped at n = 8) and weights each by theta**records, which is
what every closed-form quantity in this module is tested against.

The dominating variables B used by the profile bounds have CDF x**theta on
(0, 1); equivalently -log(B) is exponential with rate theta.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

from scipy.special import gammainc

from .model import (
    LeftProfile,
    Permutation,
    RbParams,
    build_bst,
    height,
    left_profile,
    record_count_perm,
)

ENUMERATION_MAX_N = 8
WEIGHT_MAX_N = 10

PROB_SUM_TOL = 1e-12


class InstanceTooLargeError(ValueError):
    """Raised when an exact computation is requested beyond its size cap."""


@dataclass(frozen=True)
class ExactDistribution:
    """A finite distribution with distinct, sorted outcome keys."""

    support: tuple
    probs: tuple[float, ...]

    def __post_init__(self):
        support = tuple(self.support)
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)
        if len(support) != len(probs):
            raise ValueError("support and probs must have equal length")
        if len(set(support)) != len(support):
            raise ValueError("support keys must be distinct")
        if any(p < 0.0 for p in probs):
            raise ValueError("probabilities must be non-negative")
        if support and abs(math.fsum(probs) - 1.0) > PROB_SUM_TOL:
            raise ValueError("probabilities must sum to 1")

    @classmethod
    def from_weights(cls, weights: dict) -> "ExactDistribution":
        total = math.fsum(weights.values())
        keys = sorted(weights)
        return cls(
            support=tuple(keys),
            probs=tuple(weights[k] / total for k in keys),
        )

    def as_dict(self) -> dict:
        return dict(zip(self.support, self.probs))

    def prob(self, key) -> float:
        for k, p in zip(self.support, self.probs):
            if k == key:
                return p
        return 0.0

    def tail_geq(self, x) -> float:
        """P(X >= x) for scalar-valued supports."""
        return math.fsum(p for k, p in zip(self.support, self.probs) if k >= x)

    def tail_leq(self, x) -> float:
        return math.fsum(p for k, p in zip(self.support, self.probs) if k <= x)

    def mean(self) -> float:
        return math.fsum(k * p for k, p in zip(self.support, self.probs))


@dataclass(frozen=True)
class EnumeratedLaws:
    """Exact laws over all of S_n under the record-biased weighting."""

    n: int
    theta: float
    record: ExactDistribution
    first_value: ExactDistribution
    left_subtree_size: ExactDistribution
    height: ExactDistribution
    profile: ExactDistribution
    profile_height: ExactDistribution
    height_record_first: ExactDistribution


@dataclass(frozen=True)
class TailBoundParams:
    """Inputs of the left-profile tail bound with its derived constants.

    ``C = 1 / (1 - (1 - epsilon*theta) * exp(epsilon*theta))`` and
    ``lam = epsilon * theta**2 / (1 - epsilon*theta)``; construct through
    :meth:`from_model` to get them computed and validated.
    """

    epsilon: float
    M: float
    k: int
    C: float
    lam: float

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.M < 0.0:
            raise ValueError("M must be non-negative")
        if self.k < 0:
            raise ValueError("k must be non-negative")
        if self.C <= 0.0 or self.lam <= 0.0:
            raise ValueError("C and lam must be positive")

    @classmethod
    def from_model(cls, theta: float, epsilon: float, M: float, k: int) -> "TailBoundParams":
        if theta <= 0.0:
            raise ValueError("theta must be positive")
        if epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        u = epsilon * theta
        if u >= 1.0:
            raise ValueError(f"epsilon * theta must be < 1, got {u}")
        C = 1.0 / (1.0 - (1.0 - u) * math.exp(u))
        lam = epsilon * theta * theta / (1.0 - u)
        return cls(epsilon=epsilon, M=M, k=k, C=C, lam=lam)


def _record_count_raw(values) -> int:
    best = 0
    count = 0
    for v in values:
        if v > best:
            best = v
            count += 1
    return count


@lru_cache(maxsize=None)
def _perm_stats(n: int):
    """Aggregate (record, first, height, profile sizes) counts over S_n."""
    counts: dict[tuple, int] = {}
    for values in itertools.permutations(range(1, n + 1)):
        perm = Permutation(values)
        tree = build_bst(perm)
        prof = left_profile(tree)
        key = (prof.record_count, values[0], height(tree), prof.sizes)
        counts[key] = counts.get(key, 0) + 1
    return tuple(sorted(counts.items()))


@lru_cache(maxsize=None)
def _record_histogram(n: int):
    """Map record count -> number of permutations of S_n attaining it."""
    hist: dict[int, int] = {}
    if n <= ENUMERATION_MAX_N:
        for (rec, _first, _h, _sizes), count in _perm_stats(n):
            hist[rec] = hist.get(rec, 0) + count
    else:
        for values in itertools.permutations(range(1, n + 1)):
            rec = _record_count_raw(values)
            hist[rec] = hist.get(rec, 0) + 1
    return tuple(sorted(hist.items()))


def weight(perm: Permutation, theta: float) -> float:
    """Probability of ``perm`` under the record-biased measure.

    The normalizing constant is obtained by full enumeration of S_n, so the
    instance size is capped at n = 10.
    """
    if theta <= 0.0:
        raise ValueError("theta must be positive; theta = 0 has no weight normalization")
    n = perm.n
    if n > WEIGHT_MAX_N:
        raise InstanceTooLargeError(f"weight() enumerates S_n and requires n <= {WEIGHT_MAX_N}")
    if n == 0:
        return 1.0
    total = math.fsum(count * theta**rec for rec, count in _record_histogram(n))
    return theta ** record_count_perm(perm) / total


def mu(n: int, theta: float) -> float:
    """Expected record count: sum of theta / (theta + i) for 0 <= i < n."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if theta == 0.0:
        return 0.0
    return math.fsum(theta / (theta + i) for i in range(n))


@lru_cache(maxsize=1)
def c_star() -> float:
    """The unique c >= 2 with c * log(2e / c) = 1 (about 4.311).

    This is the growth constant of the height of a binary search tree built
    from a uniform permutation. Solved by bisection to near machine
    precision and cached.
    """

    def g(c: float) -> float:
        return c * math.log(2.0 * math.e / c) - 1.0

    lo, hi = 2.0, 2.0 * math.e
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _log_survival_terms(n: int, theta: float, k: int):
    # log of prod_{1 <= i <= k} (1 - theta / (theta + n - i)), term by term
    return (math.log1p(-theta / (theta + (n - i))) for i in range(1, k + 1))


def root_split_pmf(params: RbParams, k: int) -> float:
    """P(first inserted value equals k) for a record-biased permutation."""
    n, theta = params.n, params.theta
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if theta == 0.0:
        return 1.0 if k == n else 0.0
    log_prefix = math.fsum(_log_survival_terms(n, theta, k - 1))
    return math.exp(log_prefix) * theta / (theta + (n - k))


def root_split_distribution(params: RbParams) -> list[float]:
    """The full first-value law as a length-n list (index k-1 is P(k)).

    Log-domain prefix products are accumulated with compensated summation so
    the list sums to 1 within 1e-12 even for n around 1e4 and extreme theta.
    """
    n, theta = params.n, params.theta
    if n < 1:
        raise ValueError("n must be at least 1")
    if theta == 0.0:
        return [0.0] * (n - 1) + [1.0]
    out = []
    log_prefix = 0.0
    comp = 0.0
    for k in range(1, n + 1):
        out.append(math.exp(log_prefix) * theta / (theta + (n - k)))
        if k < n:
            term = math.log1p(-theta / (theta + (n - k))) - comp
            total = log_prefix + term
            comp = (total - log_prefix) - term
            log_prefix = total
    return out


def left_root_tail(params: RbParams, k: int) -> float:
    """P(the root's left subtree has at least k nodes)."""
    n, theta = params.n, params.theta
    if not 0 <= k <= n:
        raise ValueError(f"k must be in [0, {n}], got {k}")
    if k == 0:
        return 1.0
    if k == n:
        return 0.0
    if theta == 0.0:
        return 1.0
    return math.exp(math.fsum(_log_survival_terms(n, theta, k)))


def records_mgf(params: RbParams, t: float) -> float:
    """E[exp(t * records)]: the product over steps of 1 + (e^t - 1) * p_i.

    The step-i record probability is theta / (theta + n - i); in the
    theta = 0 limit only the forced final step has probability 1.
    """
    n, theta = params.n, params.theta
    if n == 0:
        return 1.0
    em1 = math.expm1(t)
    terms = []
    for i in range(1, n + 1):
        denom = theta + (n - i)
        p = theta / denom if denom > 0.0 else 1.0
        terms.append(math.log1p(em1 * p))
    return math.exp(math.fsum(terms))


def chernoff_record_tail(params: RbParams, epsilon: float, side: str) -> float:
    """Optimized exponential-moment bound on the record-count deviation.

    ``side="upper"`` bounds P(records >= (1 + eps) * mu) by
    exp(-mu * ((1+eps) log(1+eps) - eps)); ``side="lower"`` bounds
    P(records <= (1 - eps) * mu) by exp(-mu * (eps + (1-eps) log(1-eps))),
    degenerating to exp(-mu) once eps >= 1. Both lie in (0, 1] and decrease
    in mu.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    m = mu(params.n, params.theta)
    if m <= 0.0:
        raise ValueError("mu(n, theta) must be positive")
    if side == "upper":
        exponent = (1.0 + epsilon) * math.log1p(epsilon) - epsilon
    elif side == "lower":
        if epsilon >= 1.0:
            exponent = 1.0
        else:
            exponent = epsilon + (1.0 - epsilon) * math.log1p(-epsilon)
    else:
        raise ValueError(f"side must be 'upper' or 'lower', got {side!r}")
    return math.exp(-m * exponent)


def beta_product_survival(theta: float, j: int, c: float) -> float:
    """P(product of j independent B-variables exceeds c), B with CDF x**theta.

    -log(B) is exponential with rate theta, so the product's log is a
    negative Gamma(j) sum and the survival probability is the regularized
    lower incomplete gamma P(j, theta * (-log c)).
    """
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    if not 0.0 < c < 1.0:
        raise ValueError("c must lie strictly between 0 and 1")
    if j < 0:
        raise ValueError("j must be non-negative")
    if j == 0:
        return 1.0
    return float(gammainc(j, theta * (-math.log(c))))


def left_profile_tail_bound(params: RbParams, bp: TailBoundParams) -> float:
    """Bound on P(some j <= k has profile entry above n * exp(-(1/theta - eps) j + M)).

    Returns C * exp(-lam * M) * (1 - Xi)**(-lam) with
    Xi = k * exp((1/theta - eps) k) / (n * exp(M)); may exceed 1.
    """
    n, theta = params.n, params.theta
    if n < 1:
        raise ValueError("n must be at least 1")
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    if bp.epsilon * theta >= 1.0:
        raise ValueError("epsilon * theta must be < 1")
    if bp.k == 0:
        log_xi = -math.inf
    else:
        log_xi = math.log(bp.k) + (1.0 / theta - bp.epsilon) * bp.k - math.log(n) - bp.M
    if log_xi >= 0.0:
        raise ValueError("precondition violated: k * exp((1/theta - eps) k) >= n * exp(M)")
    xi = math.exp(log_xi)
    return bp.C * math.exp(-bp.lam * bp.M) * (1.0 - xi) ** (-bp.lam)


def profile_exceedance_thresholds(params: RbParams, epsilon: float, M: float, k: int) -> list[float]:
    """Thresholds n * exp(-(1/theta - epsilon) j + M) for j = 0..k.

    A profile triggers the event bounded by :func:`left_profile_tail_bound`
    when some entry j <= k strictly exceeds its threshold.
    """
    n, theta = params.n, params.theta
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    rate = 1.0 / theta - epsilon
    return [n * math.exp(-rate * j + M) for j in range(k + 1)]


def conditional_height_tail_bound(profile: LeftProfile, eta: int, t: float) -> float:
    """Bound on P(height >= eta) given the left-subtree size profile.

    Sums (2 e^{-t})^(eta - j) * (k_j + 1)^(e^t - 1) over spine positions
    j = 0..r, where k_j = 0 beyond the profile's end.
    """
    if eta < 0:
        raise ValueError("eta must be non-negative")
    if t <= 0.0:
        raise ValueError("t must be positive")
    base = 2.0 * math.exp(-t)
    power = math.expm1(t)
    r = profile.record_count
    terms = []
    for j in range(r + 1):
        k_j = profile.sizes[j] if j < r else 0
        terms.append(base ** (eta - j) * (k_j + 1.0) ** power)
    return math.fsum(terms)


def enumerate_exact(params: RbParams) -> EnumeratedLaws:
    """Exact laws of records, first value, left size, height, and profile.

    Iterates all n! permutations of S_n weighted by theta**records, so n is
    capped at 8 and theta = 0 is rejected (the weighting is degenerate
    there; the theta -> 0 limit lives in the samplers).
    """
    n, theta = params.n, params.theta
    if n < 1:
        raise ValueError("enumerate_exact requires n >= 1")
    if n > ENUMERATION_MAX_N:
        raise InstanceTooLargeError(f"enumerate_exact iterates n! permutations; n <= {ENUMERATION_MAX_N}")
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    record_w: dict[int, float] = {}
    first_w: dict[int, float] = {}
    left_w: dict[int, float] = {}
    height_w: dict[int, float] = {}
    profile_w: dict[tuple, float] = {}
    profile_height_w: dict[tuple, float] = {}
    hrf_w: dict[tuple, float] = {}
    for (rec, first, h, sizes), count in _perm_stats(n):
        w = count * theta**rec
        record_w[rec] = record_w.get(rec, 0.0) + w
        first_w[first] = first_w.get(first, 0.0) + w
        left_w[first - 1] = left_w.get(first - 1, 0.0) + w
        height_w[h] = height_w.get(h, 0.0) + w
        profile_w[sizes] = profile_w.get(sizes, 0.0) + w
        key_ph = (sizes, h)
        profile_height_w[key_ph] = profile_height_w.get(key_ph, 0.0) + w
        key_hrf = (h, rec, first)
        hrf_w[key_hrf] = hrf_w.get(key_hrf, 0.0) + w
    return EnumeratedLaws(
        n=n,
        theta=theta,
        record=ExactDistribution.from_weights(record_w),
        first_value=ExactDistribution.from_weights(first_w),
        left_subtree_size=ExactDistribution.from_weights(left_w),
        height=ExactDistribution.from_weights(height_w),
        profile=ExactDistribution.from_weights(profile_w),
        profile_height=ExactDistribution.from_weights(profile_height_w),
        height_record_first=ExactDistribution.from_weights(hrf_w),
    )
