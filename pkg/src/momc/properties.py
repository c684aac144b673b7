"""Matrix structure properties: closed property sets, inference rules, stored patterns.

A property set is always kept closed under two rules:

  C1: lowerTri and upperTri together imply diag
  C2: diag implies lowerTri, upperTri and symm

Inference is deliberately conservative: a rule may return fewer properties
than are mathematically derivable, never more. Soundness is what the cost
model and the fill semantics depend on, and it is what the brute-force tests
check.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator

from .errors import NonSquareStructuralProperty, UnknownProperty


class ElemKind(enum.Enum):
    """IEEE-754 element type of stored entries."""

    F32 = "f32"
    F64 = "f64"

    def __str__(self) -> str:
        return self.value


class Property(enum.Enum):
    """The closed universe of structure properties (printed short names)."""

    LOWER_TRIANGULAR = "lowerTri"
    UPPER_TRIANGULAR = "upperTri"
    DIAGONAL = "diag"
    SYMMETRIC = "symm"

    def __str__(self) -> str:
        return self.value


# Fixed order used for printing and for deterministic generator selection.
_ORDER = {p: i for i, p in enumerate(Property)}

# Surface (declaration) spellings accepted by the frontend.
DECLARED_NAMES = {
    "LowerTriangular": Property.LOWER_TRIANGULAR,
    "UpperTriangular": Property.UPPER_TRIANGULAR,
    "Diagonal": Property.DIAGONAL,
    "Symmetric": Property.SYMMETRIC,
}


def _close(props: Iterable[Property]) -> frozenset[Property]:
    s = set(props)
    while True:
        add: set[Property] = set()
        if Property.LOWER_TRIANGULAR in s and Property.UPPER_TRIANGULAR in s:
            add.add(Property.DIAGONAL)
        if Property.DIAGONAL in s:
            add |= {Property.LOWER_TRIANGULAR, Property.UPPER_TRIANGULAR,
                    Property.SYMMETRIC}
        if add <= s:
            return frozenset(s)
        s |= add


@dataclass(frozen=True)
class PropertySet:
    """A set of properties stored closed under C1/C2.

    Construct through :meth:`closure`; direct construction rejects a
    non-closed member set so the invariant cannot be bypassed silently.
    """

    members: frozenset[Property]

    def __post_init__(self) -> None:
        if _close(self.members) != self.members:
            raise ValueError(f"property set {set(self.members)} is not closed")

    @staticmethod
    def closure(props: Iterable[Property]) -> "PropertySet":
        return PropertySet(_close(props))

    def __contains__(self, p: Property) -> bool:
        return p in self.members

    def __iter__(self) -> Iterator[Property]:
        return iter(sorted(self.members, key=_ORDER.__getitem__))

    def __len__(self) -> int:
        return len(self.members)

    def generators(self) -> tuple[Property, ...]:
        """Smallest subset whose closure is this set, in fixed print order.

        Ties broken by preferring earlier properties, so the diagonal closure
        prints as just `diag`.
        """
        ordered = tuple(self)
        for size in range(len(ordered) + 1):
            for combo in combinations(ordered, size):
                if _close(combo) == self.members:
                    return combo
        raise AssertionError("unreachable: the set generates itself")

    def render(self) -> str:
        """Bracketed minimal-generator form used in IR dumps, e.g. `[lowerTri]`."""
        return "[" + ",".join(str(p) for p in self.generators()) + "]"

    def __str__(self) -> str:
        return self.render()


EMPTY_PROPS = PropertySet.closure(())
DIAGONAL_PROPS = PropertySet.closure((Property.DIAGONAL,))


class StoredPattern(enum.Enum):
    """Structural-nonzero region implied by a property set, over 0-based (i, j)."""

    FULL = "full"
    LOWER_INCL = "lowerIncl"
    UPPER_INCL = "upperIncl"
    DIAG_ONLY = "diagOnly"

    def contains(self, i: int, j: int) -> bool:
        if self is StoredPattern.FULL:
            return True
        if self is StoredPattern.LOWER_INCL:
            return i >= j
        if self is StoredPattern.UPPER_INCL:
            return i <= j
        return i == j

    def __str__(self) -> str:
        return self.value


def canonicalize(declared: Iterable[str], rows: int, cols: int) -> PropertySet:
    """Map declared property names to the closed canonical set.

    All four properties require a square matrix; symmetry is included in the
    check because a rectangular symmetric type would be unrepresentable.
    """
    props = []
    for name in declared:
        if name not in DECLARED_NAMES:
            raise UnknownProperty(f"unknown property {name!r}")
        props.append(DECLARED_NAMES[name])
    if props and rows != cols:
        raise NonSquareStructuralProperty(
            f"property {props[0]} requires a square matrix, got {rows}x{cols}")
    return PropertySet.closure(props)


def infer_transpose(s: PropertySet) -> PropertySet:
    """Swap lower and upper triangularity; diagonal and symmetric are kept."""
    swap = {
        Property.LOWER_TRIANGULAR: Property.UPPER_TRIANGULAR,
        Property.UPPER_TRIANGULAR: Property.LOWER_TRIANGULAR,
    }
    return PropertySet.closure(swap.get(p, p) for p in s)


def infer_mul(a: PropertySet, dims_a: tuple[int, int],
              b: PropertySet, dims_b: tuple[int, int]) -> PropertySet:
    """Properties of a product: triangularity survives only when shared by two
    square operands; diagonal and symmetric arise only through closure."""
    out: set[Property] = set()
    ra, ca = dims_a
    rb, cb = dims_b
    if ra == ca and rb == cb:
        if Property.LOWER_TRIANGULAR in a and Property.LOWER_TRIANGULAR in b:
            out.add(Property.LOWER_TRIANGULAR)
        if Property.UPPER_TRIANGULAR in a and Property.UPPER_TRIANGULAR in b:
            out.add(Property.UPPER_TRIANGULAR)
    return PropertySet.closure(out)


def infer_add(a: PropertySet, b: PropertySet) -> PropertySet:
    """Properties of a sum: the intersection (closed for this universe)."""
    return PropertySet.closure(a.members & b.members)


def stored_pattern(s: PropertySet) -> StoredPattern:
    """Structural-nonzero region of a property set; symmetry alone stores full."""
    if Property.DIAGONAL in s:
        return StoredPattern.DIAG_ONLY
    if Property.LOWER_TRIANGULAR in s:
        return StoredPattern.LOWER_INCL
    if Property.UPPER_TRIANGULAR in s:
        return StoredPattern.UPPER_INCL
    return StoredPattern.FULL
