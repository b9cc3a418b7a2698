"""Permutations, binary search trees, and their record statistics.

A permutation is inserted value by value into a binary search tree; the
left-to-right maxima of the permutation (its records) end up on the tree's
rightmost path, and the sizes of the left subtrees hanging off that path
determine the record count through r + sum(k_j) = n.

Height conventions used throughout: a single node has height 0 and the
empty tree has height -1, so that ``height(node) = 1 + max(heights of
children)`` holds without special cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

NO_CHILD = -1


class EmptyTreeError(ValueError):
    """Raised by operations that require at least one node."""


@dataclass(frozen=True)
class RbParams:
    """A model instance: permutation size ``n`` and record bias ``theta``."""

    n: int
    theta: float

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 0:
            raise ValueError(f"n must be a non-negative integer, got {self.n!r}")
        theta = float(self.theta)
        if not math.isfinite(theta) or theta < 0.0:
            raise ValueError(f"theta must be finite and >= 0, got {self.theta!r}")
        object.__setattr__(self, "theta", theta)


@dataclass(frozen=True)
class Permutation:
    """A bijection on {1, ..., n} stored as the value sequence."""

    values: tuple[int, ...]

    def __post_init__(self):
        values = tuple(self.values)
        object.__setattr__(self, "values", values)
        n = len(values)
        seen = bytearray(n)
        for v in values:
            if not isinstance(v, int) or not (1 <= v <= n) or seen[v - 1]:
                raise ValueError(f"not a permutation of 1..{n}: {values!r}")
            seen[v - 1] = 1

    @property
    def n(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class LeftProfile:
    """Sizes of the left subtrees along the rightmost path.

    ``sizes[j]`` is the size of the left subtree hanging at the j-th node of
    the rightmost path and ``record_count`` is that path's length, so a
    profile extracted from a tree of size n satisfies
    ``record_count + sum(sizes) == n``.
    """

    sizes: tuple[int, ...]
    record_count: int

    def __post_init__(self):
        sizes = tuple(self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if self.record_count != len(sizes):
            raise ValueError("record_count must equal len(sizes)")
        if any(k < 0 for k in sizes):
            raise ValueError("subtree sizes must be non-negative")

    @property
    def total(self) -> int:
        """Number of nodes of any tree with this profile."""
        return self.record_count + sum(self.sizes)


@dataclass
class BstTree:
    """Binary search tree stored as a flat node arena.

    ``labels[i]`` is the label of node i; ``left[i]``/``right[i]`` hold child
    indices or NO_CHILD. ``root`` is NO_CHILD for the empty tree. Trees are
    treated as immutable once built.
    """

    labels: list[int] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    root: int = NO_CHILD

    @classmethod
    def empty(cls) -> "BstTree":
        return cls()

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def is_empty(self) -> bool:
        return self.root == NO_CHILD


def build_bst(perm: Permutation) -> BstTree:
    """Insert the permutation's values in order and return the resulting tree."""
    tree = BstTree()
    labels, left, right = tree.labels, tree.left, tree.right
    for v in perm.values:
        idx = len(labels)
        labels.append(v)
        left.append(NO_CHILD)
        right.append(NO_CHILD)
        if idx == 0:
            tree.root = 0
            continue
        cur = tree.root
        while True:
            if v < labels[cur]:
                nxt = left[cur]
                if nxt == NO_CHILD:
                    left[cur] = idx
                    break
            else:
                nxt = right[cur]
                if nxt == NO_CHILD:
                    right[cur] = idx
                    break
            cur = nxt
    return tree


def _subtree_height(tree: BstTree, idx: int) -> int:
    """Height of the subtree rooted at arena index ``idx`` (-1 if absent)."""
    if idx == NO_CHILD:
        return -1
    best = 0
    stack = [(idx, 0)]
    left, right = tree.left, tree.right
    while stack:
        node, depth = stack.pop()
        if depth > best:
            best = depth
        l, r = left[node], right[node]
        if l != NO_CHILD:
            stack.append((l, depth + 1))
        if r != NO_CHILD:
            stack.append((r, depth + 1))
    return best


def _subtree_size(tree: BstTree, idx: int) -> int:
    if idx == NO_CHILD:
        return 0
    count = 0
    stack = [idx]
    left, right = tree.left, tree.right
    while stack:
        node = stack.pop()
        count += 1
        if left[node] != NO_CHILD:
            stack.append(left[node])
        if right[node] != NO_CHILD:
            stack.append(right[node])
    return count


def height(tree: BstTree) -> int:
    """Maximum node depth; 0 for a single node, -1 for the empty tree."""
    return _subtree_height(tree, tree.root)


def record_count_perm(perm: Permutation) -> int:
    """Number of left-to-right maxima (0 for the empty permutation)."""
    best = 0
    count = 0
    for v in perm.values:
        if v > best:
            best = v
            count += 1
    return count


def _spine(tree: BstTree) -> list[int]:
    """Arena indices of the rightmost path, root first."""
    nodes = []
    cur = tree.root
    while cur != NO_CHILD:
        nodes.append(cur)
        cur = tree.right[cur]
    return nodes


def record_count_tree(tree: BstTree) -> int:
    """Length of the rightmost path; equals the record count of any
    permutation that builds the tree (0 for the empty tree)."""
    return len(_spine(tree))


def left_profile(tree: BstTree) -> LeftProfile:
    """Left-subtree sizes along the rightmost path of a non-empty tree."""
    if tree.is_empty:
        raise EmptyTreeError("left_profile of the empty tree")
    spine = _spine(tree)
    sizes = tuple(_subtree_size(tree, tree.left[node]) for node in spine)
    return LeftProfile(sizes=sizes, record_count=len(spine))


def height_via_profile(tree: BstTree) -> int:
    """Height recomputed from the rightmost path decomposition.

    Evaluates ``max(r - 1, max_j(j + 1 + height(left subtree at spine node
    j)))`` and must always agree with :func:`height`.
    """
    if tree.is_empty:
        raise EmptyTreeError("height_via_profile of the empty tree")
    spine = _spine(tree)
    best = len(spine) - 1
    for j, node in enumerate(spine):
        l = tree.left[node]
        if l != NO_CHILD:
            candidate = j + 1 + _subtree_height(tree, l)
            if candidate > best:
                best = candidate
    return best


def preorder_labels(tree: BstTree) -> list[int]:
    """Labels in preorder; uniquely identifies a binary search tree."""
    if tree.is_empty:
        return []
    out = []
    stack = [tree.root]
    while stack:
        node = stack.pop()
        out.append(tree.labels[node])
        r, l = tree.right[node], tree.left[node]
        if r != NO_CHILD:
            stack.append(r)
        if l != NO_CHILD:
            stack.append(l)
    return out


def shape_signature(tree: BstTree):
    """Label-free shape of the tree as nested tuples (() for the empty tree)."""
    if tree.is_empty:
        return ()
    sig: dict[int, tuple] = {NO_CHILD: ()}
    stack = [(tree.root, False)]
    while stack:
        node, expanded = stack.pop()
        l, r = tree.left[node], tree.right[node]
        if expanded:
            sig[node] = (sig[l], sig[r])
        else:
            stack.append((node, True))
            if l != NO_CHILD:
                stack.append((l, False))
            if r != NO_CHILD:
                stack.append((r, False))
    return sig[tree.root]


def is_valid_bst(tree: BstTree) -> bool:
    """Check the search property and that labels are exactly {1, ..., size}."""
    n = tree.size
    if tree.is_empty:
        return n == 0
    if sorted(tree.labels) != list(range(1, n + 1)):
        return False
    visited = 0
    stack = [(tree.root, 0, n + 1)]
    while stack:
        node, lo, hi = stack.pop()
        visited += 1
        label = tree.labels[node]
        if not (lo < label < hi):
            return False
        l, r = tree.left[node], tree.right[node]
        if l != NO_CHILD:
            stack.append((l, lo, label))
        if r != NO_CHILD:
            stack.append((r, label, hi))
    return visited == n
