"""Seeded random generation of record-biased permutations and trees.

Two equivalent mechanisms are provided: a sequential generator that places
values one at a time (each step picks the leftmost open position with
probability theta / (theta + remaining)), and a recursive generator that
draws the root split and recurses, with the left subtree uniform (theta = 1)
and the right subtree keeping the record bias.

Randomness contract: a (seed, stream_index) pair identifies a stream. The
stream's engine is a PCG64 generator keyed by a SplitMix64 finalizer applied
to seed XOR stream_index, so identical pairs reproduce identical draws
within this implementation and distinct stream indices give independent
streams. Cross-platform bit-exactness is not promised.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from .model import NO_CHILD, BstTree, LeftProfile, Permutation, RbParams

_MASK64 = (1 << 64) - 1

# Subtree sizes at or below this use plain Python scan/recursion paths;
# larger ones switch to log-gamma inversion and vectorized level sweeps.
_SCAN_LIMIT = 64
_BFS_MIN_N = 4096


def _mix64(z: int) -> int:
    """SplitMix64 finalizer; the documented stream-derivation mix."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


class RandomSource:
    """A reproducible uniform-variate stream.

    Scalar draws are served from an internal block buffer for speed; this is
    an implementation detail and does not affect reproducibility.
    """

    _BLOCK = 4096

    def __init__(self, seed: int, stream_index: int = 0):
        for name, value in (("seed", seed), ("stream_index", stream_index)):
            if not isinstance(value, int) or not 0 <= value < 1 << 64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value!r}")
        self.seed = seed
        self.stream_index = stream_index
        self._gen = np.random.Generator(np.random.PCG64(_mix64(seed ^ stream_index)))
        self._buf = self._gen.random(self._BLOCK)
        self._pos = 0

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, stream_index={self.stream_index})"

    def stream(self, stream_index: int) -> "RandomSource":
        """A fresh source for the same seed under another stream index."""
        return RandomSource(self.seed, stream_index)

    def random(self) -> float:
        """One uniform variate in [0, 1)."""
        if self._pos == len(self._buf):
            self._buf = self._gen.random(self._BLOCK)
            self._pos = 0
        value = self._buf[self._pos]
        self._pos += 1
        return float(value)

    def randoms(self, count: int) -> np.ndarray:
        """``count`` uniform variates in [0, 1) as a float64 array."""
        if count < 0:
            raise ValueError("count must be non-negative")
        if count >= self._BLOCK:
            return self._gen.random(count)
        available = len(self._buf) - self._pos
        if count <= available:
            out = self._buf[self._pos : self._pos + count].copy()
            self._pos += count
            return out
        head = self._buf[self._pos :].copy()
        self._pos = len(self._buf)
        tail = self._gen.random(count - len(head))
        return np.concatenate([head, tail])

    def integers_below(self, bounds: np.ndarray) -> np.ndarray:
        """Per-element uniform integers in [0, bounds); bounds must be >= 1."""
        return self._gen.integers(0, bounds)


class _Fenwick:
    """Order-statistics set over positions 1..n (membership counts)."""

    def __init__(self, n: int):
        self.n = n
        tree = [0] * (n + 1)
        for i in range(1, n + 1):
            tree[i] += 1
            j = i + (i & -i)
            if j <= n:
                tree[j] += tree[i]
        self.tree = tree
        self.log = n.bit_length()

    def remove(self, i: int) -> None:
        n, tree = self.n, self.tree
        while i <= n:
            tree[i] -= 1
            i += i & -i

    def select(self, rank: int) -> int:
        """The position holding the rank-th smallest member (1-indexed)."""
        pos = 0
        remaining = rank
        tree, n = self.tree, self.n
        bit = 1 << self.log
        while bit:
            nxt = pos + bit
            if nxt <= n and tree[nxt] < remaining:
                pos = nxt
                remaining -= tree[nxt]
            bit >>= 1
        return pos + 1


def sample_sequential(params: RbParams, rng: RandomSource) -> Permutation:
    """Draw a record-biased permutation by sequential placement.

    At step i the value i goes to the leftmost open position with
    probability theta / (theta + n - i) and to a uniformly chosen other open
    position otherwise; for theta = 0 the leftmost position is taken only
    when it is the only one left. Consumes between n and 2n uniforms.
    """
    n, theta = params.n, params.theta
    values = [0] * n
    if n > 128:
        fen = _Fenwick(n)
        for i in range(1, n + 1):
            others = n - i
            u = rng.random()
            if others == 0 or (theta > 0.0 and u < theta / (theta + others)):
                pos = fen.select(1)
            else:
                pos = fen.select(2 + int(rng.random() * others))
            fen.remove(pos)
            values[pos - 1] = i
    else:
        open_positions = list(range(1, n + 1))
        for i in range(1, n + 1):
            others = n - i
            u = rng.random()
            if others == 0 or (theta > 0.0 and u < theta / (theta + others)):
                pos = open_positions.pop(0)
            else:
                pos = open_positions.pop(1 + int(rng.random() * others))
            values[pos - 1] = i
    return Permutation(tuple(values))


def _log_left_survival(m, theta, k):
    """log P(left subtree size >= k) in a record-biased tree of size m."""
    return gammaln(m) - gammaln(m - k) + gammaln(theta + (m - k)) - gammaln(theta + m)


def _sample_left_size(m: int, theta: float, rng: RandomSource) -> int:
    """Left-subtree size (first value minus 1) for a tree of m >= 1 nodes.

    Small or bias-dominated instances scan the per-step record chances
    directly, mirroring the sequential mechanism; large ones invert the
    closed-form survival function by binary search on its log-gamma form,
    which is the same law in O(log m) time.
    """
    if theta == 0.0:
        return m - 1
    if m <= _SCAN_LIMIT or m <= 16.0 * theta:
        for i in range(1, m + 1):
            if rng.random() < theta / (theta + (m - i)):
                return i - 1
        return m - 1
    u = rng.random()
    if u <= 0.0:
        return m - 1
    log_u = math.log(u)
    lg_m = math.lgamma(m)
    lg_tm = math.lgamma(theta + m)
    lo, hi = 0, m - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        log_s = lg_m - math.lgamma(m - mid) + math.lgamma(theta + (m - mid)) - lg_tm
        if log_s > log_u:
            lo = mid
        else:
            hi = mid - 1
    return lo


def _sample_left_sizes_vec(sizes: np.ndarray, theta: float, us: np.ndarray) -> np.ndarray:
    """Vectorized left-subtree size draws for many trees at once."""
    if theta == 0.0:
        return sizes - 1
    log_us = np.log(np.maximum(us, 1e-300))
    lo = np.zeros(len(sizes), dtype=np.int64)
    hi = sizes - 1
    for _ in range(int(sizes.max()).bit_length() + 1):
        if not (lo < hi).any():
            break
        mid = (lo + hi + 1) >> 1
        take = _log_left_survival(sizes, theta, mid) > log_us
        lo = np.where(take, mid, lo)
        hi = np.where(take, hi, mid - 1)
    return lo


def sample_tree_recursive(params: RbParams, rng: RandomSource) -> BstTree:
    """Generate a record-biased tree top-down from root splits.

    The root label is 1 + the drawn left size; the left subtree is generated
    as a uniform (theta = 1) tree on the smaller labels and the right
    subtree keeps theta. Labels come out as {1, ..., n}.
    """
    n, theta = params.n, params.theta
    tree = BstTree()
    if n == 0:
        return tree
    labels, left, right = tree.labels, tree.left, tree.right
    tree.root = 0
    # stack entries: (lo, hi, parent index, is_left_child, local theta)
    stack = [(1, n, NO_CHILD, False, theta)]
    while stack:
        lo, hi, parent, is_left, local_theta = stack.pop()
        m = hi - lo + 1
        k = _sample_left_size(m, local_theta, rng)
        label = lo + k
        idx = len(labels)
        labels.append(label)
        left.append(NO_CHILD)
        right.append(NO_CHILD)
        if parent != NO_CHILD:
            if is_left:
                left[parent] = idx
            else:
                right[parent] = idx
        if label + 1 <= hi:
            stack.append((label + 1, hi, idx, False, local_theta))
        if lo <= label - 1:
            stack.append((lo, label - 1, idx, True, 1.0))
    return tree


class HeightSample(NamedTuple):
    height: int
    records: int
    profile: LeftProfile


def _spine_profile(n: int, theta: float, rng: RandomSource) -> list[int]:
    """Left-subtree sizes along the rightmost path, drawn split by split."""
    sizes = []
    m = n
    while m > 0:
        k = _sample_left_size(m, theta, rng)
        sizes.append(k)
        m -= k + 1
    return sizes


def _uniform_heights_scalar(seeds: list[tuple[int, int]], rng: RandomSource) -> int:
    """Deepest node depth over uniform BSTs rooted at given (size, depth)."""
    best = -1
    stack = list(seeds)
    while stack:
        m, depth = stack.pop()
        if depth > best:
            best = depth
        split = int(rng.random() * m)
        right = m - 1 - split
        if split:
            stack.append((split, depth + 1))
        if right:
            stack.append((right, depth + 1))
    return best


def _uniform_heights_bfs(sizes: list[int], rng: RandomSource) -> int:
    """Deepest node depth over uniform BSTs, size[j] rooted at depth j + 1.

    Sweeps one depth level at a time with vectorized splits; each node is
    touched exactly once, so the sweep is O(total size).
    """
    best = -1
    frontier = np.empty(0, dtype=np.int64)
    depth = 0
    r = len(sizes)
    while True:
        depth += 1
        parts = [frontier]
        if depth <= r and sizes[depth - 1] > 0:
            parts.append(np.array([sizes[depth - 1]], dtype=np.int64))
        current = np.concatenate(parts) if len(parts) > 1 else frontier
        if current.size == 0:
            if depth > r:
                break
            continue
        best = depth
        splits = rng.integers_below(current)
        children = np.concatenate([splits, current - 1 - splits])
        frontier = children[children > 0]
    return best


def sample_height_only(params: RbParams, rng: RandomSource) -> HeightSample:
    """Sample (height, records, profile) without materializing labels.

    Same joint law as :func:`sample_tree_recursive` followed by the model
    statistics, but memory stays O(spine + frontier), so sizes in the
    millions are fine.
    """
    n, theta = params.n, params.theta
    if n == 0:
        return HeightSample(-1, 0, LeftProfile((), 0))
    sizes = _spine_profile(n, theta, rng)
    r = len(sizes)
    if n < _BFS_MIN_N:
        seeds = [(k, j + 1) for j, k in enumerate(sizes) if k > 0]
        h = max(r - 1, _uniform_heights_scalar(seeds, rng))
    else:
        h = max(r - 1, _uniform_heights_bfs(sizes, rng))
    return HeightSample(h, r, LeftProfile(tuple(sizes), r))


def sample_record_count(params: RbParams, rng: RandomSource) -> int:
    """Record count alone, via the sequential mechanism's step indicators.

    Step i contributes a record independently with probability
    theta / (theta + n - i), so the count is a sum of independent Bernoulli
    draws; this matches the record law of the full samplers.
    """
    n, theta = params.n, params.theta
    if n == 0:
        return 0
    if theta == 0.0:
        return 1
    probs = theta / (theta + np.arange(n - 1, -1, -1, dtype=np.float64))
    return int((rng.randoms(n) < probs).sum())


def sample_left_profile_matrix(
    params: RbParams, trials: int, max_j: int, rng: RandomSource
) -> np.ndarray:
    """Profile entries k_0..k_max_j for many independent trees at once.

    Returns an int64 array of shape (trials, max_j + 1); positions past a
    tree's spine end are 0.
    """
    n, theta = params.n, params.theta
    if trials < 1:
        raise ValueError("trials must be at least 1")
    remaining = np.full(trials, n, dtype=np.int64)
    out = np.zeros((trials, max_j + 1), dtype=np.int64)
    for j in range(max_j + 1):
        active = remaining > 0
        count = int(active.sum())
        if count == 0:
            break
        ks = _sample_left_sizes_vec(remaining[active], theta, rng.randoms(count))
        out[active, j] = ks
        remaining[active] -= ks + 1
    return out


def sample_dominating_profile(params: RbParams, j: int, rng: RandomSource) -> float:
    """One draw of j + n * prod(B_0..B_{j-1}) with B of CDF x**theta.

    This variable stochastically dominates the j-th left-subtree size; the
    B draws use the inverse CDF U**(1/theta), taken in log space.
    """
    if params.theta <= 0.0:
        raise ValueError("theta must be positive")
    if j < 0:
        raise ValueError("j must be non-negative")
    if j == 0:
        return float(params.n)
    log_product = math.fsum(math.log(max(rng.random(), 1e-300)) for _ in range(j)) / params.theta
    return j + params.n * math.exp(log_product)
