"""Structure-aware matrix-chain parenthesization.

Classic interval dynamic programming over a chain of typed operands, with a
cost model that counts scalar multiplications touching stored entries only:

    cost(a, b) = |{(i, j, k) : (i, k) in stored(a) and (k, j) in stored(b)}|

For unstructured operands this is the familiar m*k*n; triangular and diagonal
operands pay only for their stored region. Each DP cell also carries the
inferred type of its subchain product, so structure propagates into later
cost decisions. All costs are exact integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterator, Union

from .errors import ChainTooLong, DimMismatch
from .properties import (
    PropertySet,
    StoredPattern,
    infer_mul,
    stored_pattern,
)

# (rows, cols, props) of an operand or of a subchain product.
OperandType = tuple[int, int, PropertySet]


@dataclass(frozen=True)
class ChainOperand:
    rows: int
    cols: int
    props: PropertySet
    payload: Any = None  # opaque leaf handle for the caller

    @property
    def type(self) -> OperandType:
        return (self.rows, self.cols, self.props)


@dataclass(frozen=True)
class ChainLeaf:
    index: int


@dataclass(frozen=True)
class ChainNode:
    left: "ChainTree"
    right: "ChainTree"


ChainTree = Union[ChainLeaf, ChainNode]


def mul_cost(a: OperandType, b: OperandType) -> int:
    """Scalar multiplications for one product, in closed form.

    Structured patterns only occur on square operands (enforced by the type
    system), so the triangular/diagonal cases reduce to formulas in the shared
    inner dimension K.
    """
    m, ka, pa = a
    kb, n, pb = b
    if ka != kb:
        raise DimMismatch(f"inner dims disagree, {ka} vs {kb}")
    k = ka
    sa = stored_pattern(pa)
    sb = stored_pattern(pb)
    tri = (StoredPattern.LOWER_INCL, StoredPattern.UPPER_INCL)
    if sa is not StoredPattern.FULL and m != k:
        raise DimMismatch("structured left operand must be square")
    if sb is not StoredPattern.FULL and n != k:
        raise DimMismatch("structured right operand must be square")

    if sa is StoredPattern.FULL:
        if sb is StoredPattern.FULL:
            return m * k * n
        if sb in tri:
            return m * k * (k + 1) // 2
        return m * k  # diagonal right
    if sa in tri:
        if sb is StoredPattern.FULL:
            return k * (k + 1) // 2 * n
        if sb in tri:
            if sa is sb:
                return k * (k + 1) * (k + 2) // 6
            return k * k + k * (k - 1) * (2 * k - 1) // 6
        return k * (k + 1) // 2  # diagonal right
    # diagonal left
    if sb is StoredPattern.FULL:
        return k * n
    if sb in tri:
        return k * (k + 1) // 2
    return k  # diagonal * diagonal


def cost_oracle(a: OperandType, b: OperandType) -> int:
    """Count the stored multiplication triples directly (dims at most 64)."""
    m, ka, pa = a
    kb, n, pb = b
    if ka != kb:
        raise DimMismatch(f"inner dims disagree, {ka} vs {kb}")
    if max(m, ka, n) > 64:
        raise ValueError("cost_oracle is for dims <= 64")
    sa = stored_pattern(pa)
    sb = stored_pattern(pb)
    count = 0
    for i in range(m):
        for k in range(ka):
            if sa.contains(i, k):
                for j in range(n):
                    if sb.contains(k, j):
                        count += 1
    return count


def product_type(a: OperandType, b: OperandType) -> OperandType:
    if a[1] != b[0]:
        raise DimMismatch(f"inner dims disagree, {a[1]} vs {b[0]}")
    return (a[0], b[1], infer_mul(a[2], (a[0], a[1]), b[2], (b[0], b[1])))


def tree_type(tree: ChainTree, chain: list[ChainOperand] | tuple[ChainOperand, ...]) -> OperandType:
    if isinstance(tree, ChainLeaf):
        return chain[tree.index].type
    return product_type(tree_type(tree.left, chain), tree_type(tree.right, chain))


def tree_cost(tree: ChainTree, chain: list[ChainOperand] | tuple[ChainOperand, ...]) -> int:
    """Recompute the scalar-multiplication cost of a parenthesization tree."""
    if isinstance(tree, ChainLeaf):
        return 0
    lt = tree_type(tree.left, chain)
    rt = tree_type(tree.right, chain)
    return tree_cost(tree.left, chain) + tree_cost(tree.right, chain) \
        + mul_cost(lt, rt)


def tree_string(tree: ChainTree, names: list[str] | tuple[str, ...]) -> str:
    """Bracketed rendering, e.g. `(A1*(A2*(A3*A4)))`."""
    if isinstance(tree, ChainLeaf):
        return names[tree.index]
    return f"({tree_string(tree.left, names)}*{tree_string(tree.right, names)})"


def left_fold_tree(length: int) -> ChainTree:
    """The source-order parenthesization ((A1*A2)*A3)*..."""
    tree: ChainTree = ChainLeaf(0)
    for i in range(1, length):
        tree = ChainNode(tree, ChainLeaf(i))
    return tree


@dataclass
class ChainSolution:
    """DP tables plus the chosen tree. Cells are None below the diagonal."""

    cost: list[list[int | None]]          # m[i][j], exact integers
    split: list[list[int | None]]         # s[i][j]
    types: list[list[OperandType | None]]  # type of the subchain product
    tree: ChainTree
    total_cost: int


def _check_chain(chain: list[ChainOperand] | tuple[ChainOperand, ...]) -> None:
    if not chain:
        raise ValueError("chain must not be empty")
    for a, b in zip(chain, chain[1:]):
        if a.cols != b.rows:
            raise DimMismatch(f"inner dims disagree, {a.cols} vs {b.rows}")


def optimal_parenthesization(
        chain: list[ChainOperand] | tuple[ChainOperand, ...]) -> ChainSolution:
    """O(k^3) interval DP with per-cell type propagation.

    Subchain types fold left, which is safe because property inference is
    associative for square same-size operands. Cost ties break toward the
    smallest split index so dumps are deterministic.
    """
    _check_chain(chain)
    k = len(chain)
    cost: list[list[int | None]] = [[None] * k for _ in range(k)]
    split: list[list[int | None]] = [[None] * k for _ in range(k)]
    types: list[list[OperandType | None]] = [[None] * k for _ in range(k)]
    for i in range(k):
        cost[i][i] = 0
        types[i][i] = chain[i].type
    for length in range(2, k + 1):
        for i in range(0, k - length + 1):
            j = i + length - 1
            types[i][j] = product_type(types[i][j - 1], types[j][j])  # type: ignore[arg-type]
            best: int | None = None
            best_s = i
            for s in range(i, j):
                q = cost[i][s] + cost[s + 1][j] \
                    + mul_cost(types[i][s], types[s + 1][j])  # type: ignore[arg-type]
                if best is None or q < best:
                    best, best_s = q, s
            cost[i][j] = best
            split[i][j] = best_s

    def build(i: int, j: int) -> ChainTree:
        if i == j:
            return ChainLeaf(i)
        s = split[i][j]
        assert s is not None
        return ChainNode(build(i, s), build(s + 1, j))

    tree = build(0, k - 1)
    total = cost[0][k - 1]
    assert total is not None
    return ChainSolution(cost, split, types, tree, total)


def _all_trees(i: int, j: int) -> Iterator[ChainTree]:
    if i == j:
        yield ChainLeaf(i)
        return
    for s in range(i, j):
        for left in _all_trees(i, s):
            for right in _all_trees(s + 1, j):
                yield ChainNode(left, right)


def enumerate_parenthesizations(
        chain: list[ChainOperand] | tuple[ChainOperand, ...]
) -> list[tuple[ChainTree, int]]:
    """All binary trees with their exact costs; the DP correctness oracle."""
    _check_chain(chain)
    if len(chain) > 10:
        raise ChainTooLong(f"{len(chain)} operands exceeds the enumeration "
                           "limit of 10")
    return [(tree, tree_cost(tree, chain))
            for tree in _all_trees(0, len(chain) - 1)]
