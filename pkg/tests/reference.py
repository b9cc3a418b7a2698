"""Independent brute-force reference implementations for the tests.

Everything here is deliberately written without the rbtrees package:
recursive tuple trees, direct scans, and O(n^2) dynamic programming. These
are the oracles that the library's closed forms and samplers are checked
against.
"""

import itertools
import math


def ref_insert(node, v):
    if node is None:
        return (v, None, None)
    label, left, right = node
    if v < label:
        return (label, ref_insert(left, v), right)
    return (label, left, ref_insert(right, v))


def ref_bst(values):
    node = None
    for v in values:
        node = ref_insert(node, v)
    return node


def ref_height(node):
    if node is None:
        return -1
    _, left, right = node
    return 1 + max(ref_height(left), ref_height(right))


def ref_size(node):
    if node is None:
        return 0
    _, left, right = node
    return 1 + ref_size(left) + ref_size(right)


def ref_records(values):
    best = 0
    count = 0
    for v in values:
        if v > best:
            best = v
            count += 1
    return count


def ref_left_sizes(values):
    """Left-subtree sizes along the rightmost path of the BST of values."""
    node = ref_bst(values)
    sizes = []
    while node is not None:
        label, left, right = node
        sizes.append(ref_size(left))
        node = right
    return tuple(sizes)


def ref_shape(node):
    if node is None:
        return ()
    _, left, right = node
    return (ref_shape(left), ref_shape(right))


def ref_enumerate_weighted(n, theta):
    """Map each permutation of S_n to its normalized theta**records weight."""
    weights = {}
    for values in itertools.permutations(range(1, n + 1)):
        weights[values] = theta ** ref_records(values)
    total = math.fsum(weights.values())
    return {values: w / total for values, w in weights.items()}


def poisson_binomial_pmf(probs):
    """PMF of a sum of independent Bernoulli variables, by convolution."""
    coeffs = [1.0]
    for p in probs:
        nxt = [0.0] * (len(coeffs) + 1)
        for k, c in enumerate(coeffs):
            nxt[k] += c * (1.0 - p)
            nxt[k + 1] += c * p
        coeffs = nxt
    return coeffs
