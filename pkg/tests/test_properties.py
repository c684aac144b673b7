"""Property algebra: canonicalization, inference rules, stored patterns.

The inference rules are checked for soundness against exact integer
arithmetic: for random matrices realizing the operand structures, the
numeric result's nonzero entries must lie inside the inferred pattern.
"""

import random
from itertools import product

import numpy as np
import pytest

from momc.errors import NonSquareStructuralProperty, UnknownProperty
from momc.properties import (
    EMPTY_PROPS,
    Property,
    PropertySet,
    StoredPattern,
    canonicalize,
    infer_add,
    infer_mul,
    infer_transpose,
    stored_pattern,
)

from gen import CLOSED_PSETS, default_seed

L = Property.LOWER_TRIANGULAR
U = Property.UPPER_TRIANGULAR
D = Property.DIAGONAL
S = Property.SYMMETRIC

LOWER = PropertySet.closure((L,))
UPPER = PropertySet.closure((U,))
SYMM = PropertySet.closure((S,))
DIAG = PropertySet.closure((D,))


def test_canonicalize_single_property():
    assert canonicalize(["LowerTriangular"], 5, 5) == LOWER


def test_canonicalize_closure_lower_upper():
    got = canonicalize(["LowerTriangular", "UpperTriangular"], 5, 5)
    assert got.members == frozenset({L, U, D, S})


def test_canonicalize_rejects_non_square():
    with pytest.raises(NonSquareStructuralProperty):
        canonicalize(["LowerTriangular"], 4, 5)
    with pytest.raises(NonSquareStructuralProperty):
        canonicalize(["Symmetric"], 4, 5)


def test_canonicalize_rejects_unknown_name():
    with pytest.raises(UnknownProperty):
        canonicalize(["Triangular"], 5, 5)


def test_property_set_constructor_requires_closed():
    with pytest.raises(ValueError):
        PropertySet(frozenset({L, U}))  # missing diag


def test_infer_transpose():
    assert infer_transpose(LOWER) == UPPER
    assert infer_transpose(DIAG) == DIAG
    assert infer_transpose(EMPTY_PROPS) == EMPTY_PROPS


@pytest.mark.parametrize("s", CLOSED_PSETS)
def test_transpose_is_an_involution(s):
    assert infer_transpose(infer_transpose(s)) == s


def test_infer_mul():
    sq = (5, 5)
    assert infer_mul(LOWER, sq, LOWER, sq) == LOWER
    assert infer_mul(LOWER, sq, UPPER, sq) == EMPTY_PROPS
    assert infer_mul(DIAG, sq, DIAG, sq) == DIAG


def test_infer_mul_rectangular_drops_triangularity():
    assert infer_mul(LOWER, (5, 5), EMPTY_PROPS, (5, 3)) == EMPTY_PROPS


def test_infer_add():
    assert infer_add(LOWER, LOWER) == LOWER
    assert infer_add(SYMM, SYMM) == SYMM
    assert infer_add(LOWER, UPPER) == EMPTY_PROPS


def test_stored_pattern():
    assert stored_pattern(LOWER) is StoredPattern.LOWER_INCL
    assert stored_pattern(DIAG) is StoredPattern.DIAG_ONLY
    assert stored_pattern(SYMM) is StoredPattern.FULL
    assert stored_pattern(EMPTY_PROPS) is StoredPattern.FULL


def test_render_uses_minimal_generators():
    assert DIAG.render() == "[diag]"
    assert LOWER.render() == "[lowerTri]"
    assert EMPTY_PROPS.render() == "[]"
    assert PropertySet.closure((L, S)).render() == "[lowerTri,symm]"


@pytest.mark.parametrize("a,b", list(product(CLOSED_PSETS, repeat=2)))
def test_mul_associative_at_property_level(a, b):
    sq = (6, 6)
    for c in CLOSED_PSETS:
        lhs = infer_mul(infer_mul(a, sq, b, sq), sq, c, sq)
        rhs = infer_mul(a, sq, infer_mul(b, sq, c, sq), sq)
        assert lhs == rhs


def _realize(props: PropertySet, n: int, rng: random.Random) -> np.ndarray:
    """Random exact-integer matrix realizing every property in the set."""
    m = np.array([[rng.randint(1, 9) for _ in range(n)] for _ in range(n)],
                 dtype=object)
    if S in props:
        m = m + m.T
    pat = stored_pattern(props)
    mask = np.array([[1 if pat.contains(i, j) else 0 for j in range(n)]
                     for i in range(n)], dtype=object)
    if S in props:
        mask = mask * mask.T
    return m * mask


def _zeros_outside(m: np.ndarray, pat: StoredPattern) -> bool:
    n0, n1 = m.shape
    return all(m[i, j] == 0
               for i in range(n0) for j in range(n1) if not pat.contains(i, j))


def test_inference_soundness_against_brute_force():
    rng = random.Random(default_seed())
    n = 6
    sq = (n, n)
    for a, b in product(CLOSED_PSETS, repeat=2):
        for _ in range(3):
            ma = _realize(a, n, rng)
            mb = _realize(b, n, rng)
            assert _zeros_outside(ma @ mb, stored_pattern(infer_mul(a, sq, b, sq)))
            assert _zeros_outside(ma + mb, stored_pattern(infer_add(a, b)))
            assert _zeros_outside(ma.T, stored_pattern(infer_transpose(a)))


def test_inference_outputs_are_closed():
    # PropertySet construction enforces closure, so surviving construction
    # across the whole cross-product is the check.
    sq = (4, 4)
    for a, b in product(CLOSED_PSETS, repeat=2):
        for s in (infer_mul(a, sq, b, sq), infer_add(a, b), infer_transpose(a)):
            assert PropertySet.closure(s.members) == s
