"""Group-ring elements, their finite representations, and spectral helpers."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from detgraph import (
    CapacityExceeded,
    FreeGroup,
    GroupRingElement,
    InvalidArgument,
    Zd,
    build_torus,
    element_trace,
    heat_kernel,
    kernel_fraction,
    limit_trace,
    normalized_trace,
    parse_element,
    random_schreier,
    represent,
    schatten_norm,
    spectral_measure,
    validate_contraction,
)
from detgraph.operators import GroupWord, free_reduce, matrix_from, word_fixed_fraction
from detgraph.rng import RandomStream

LETTERS = "stST"


# ---------------------------------------------------------------------------
# words
# ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "raw, reduced",
    [("sS", ""), ("stTS", ""), ("sst", "sst"), ("sTtS", ""), ("TsSt", "")],
)
def test_free_reduce(raw, reduced):
    assert free_reduce(raw) == reduced


@given(st.text(alphabet=LETTERS, max_size=12))
def test_free_reduce_idempotent(w):
    r = free_reduce(w)
    assert free_reduce(r) == r


@given(st.text(alphabet=LETTERS, max_size=10))
def test_word_times_inverse_reduces_to_identity(w):
    word = GroupWord(w)
    assert free_reduce(word.letters + word.inverse().letters) == ""


def test_group_word_validation():
    with pytest.raises(InvalidArgument):
        GroupWord("s2")
    assert str(GroupWord("")) == "1"
    assert GroupWord("sT").inverse() == GroupWord("tS")


# ---------------------------------------------------------------------------
# elements and parsing
# ---------------------------------------------------------------------------

def test_parse_linear_combination():
    a = parse_element("2 - s - S")
    assert [(c, w.letters) for c, w in a.terms] == [
        (Fraction(2), ""),
        (Fraction(-1), "S"),
        (Fraction(-1), "s"),
    ]
    assert a.has_integer_coefficients
    assert a.max_word_length == 1


def test_parse_coefficients_and_words():
    b = parse_element("1/2*st + 3 - 2*T")
    pairs = {w.letters: c for c, w in b.terms}
    assert pairs == {"": Fraction(3), "T": Fraction(-2), "st": Fraction(1, 2)}
    assert not b.has_integer_coefficients


def test_parse_sign_composition():
    assert parse_element("2 -- s") == parse_element("2 + s")


@pytest.mark.parametrize("bad", ["", "3 +", "s^2", "1.5.2*s", "2 * *s"])
def test_parse_rejects_malformed(bad):
    with pytest.raises(InvalidArgument):
        parse_element(bad)


def test_terms_merge_and_cancel():
    a = parse_element("s + s - 2*s + t")
    assert [(c, w.letters) for c, w in a.terms] == [(Fraction(1), "t")]
    assert (a - a).is_zero


def test_adjoint():
    assert parse_element("2 - s - S").adjoint() == parse_element("2 - s - S")
    assert parse_element("1 + s + t").adjoint() == parse_element("1 + S + T")


def test_self_adjoint_square_expansion():
    a = parse_element("1 + s + t")
    sq = a * a.adjoint()
    pairs = {w.letters: c for c, w in sq.terms}
    assert pairs[""] == Fraction(3)
    assert set(pairs) == {"", "s", "S", "t", "T", "sT", "tS"}


# ---------------------------------------------------------------------------
# representations
# ---------------------------------------------------------------------------

def test_representation_is_multiplicative():
    g = build_torus([4, 3])
    a = parse_element("s + 2*t")
    b = parse_element("1 - S")
    left = represent(a * b, g).entries
    right = represent(a, g).entries @ represent(b, g).entries
    np.testing.assert_allclose(left, right, atol=1e-12)


def test_full_rotation_is_identity():
    g = build_torus([6])
    a = GroupRingElement.from_terms([(1, GroupWord("s" * 6))])
    np.testing.assert_allclose(represent(a, g).entries, np.eye(6), atol=0)
    assert element_trace(a, g) == 1.0


def test_element_trace_matches_matrix_trace():
    g = random_schreier(2, 50, RandomStream(7))
    a = parse_element("2 - s - S + 1/3*tT")
    assert element_trace(a, g) == pytest.approx(
        normalized_trace(represent(a, g).entries), abs=1e-12
    )


def test_word_fixed_fraction_counts_fixed_points():
    g = build_torus([5])
    assert word_fixed_fraction(g, GroupWord("s")) == 0.0
    assert word_fixed_fraction(g, GroupWord("sssss")) == 1.0
    assert word_fixed_fraction(g, GroupWord("sS")) == 1.0


def test_represent_ground_cap():
    g = random_schreier(1, 3001, RandomStream(1))
    with pytest.raises(CapacityExceeded):
        represent(parse_element("s"), g)


# ---------------------------------------------------------------------------
# limit traces
# ---------------------------------------------------------------------------

def test_limit_trace_reads_identity_coefficient_on_zd():
    assert limit_trace(parse_element("2 - s - S"), Zd(1)) == 2.0
    assert limit_trace(parse_element("5 + 3*st - 2*sT"), Zd(2)) == 5.0


def test_limit_trace_commutator():
    a = GroupRingElement.from_terms([(1, GroupWord("stST"))])
    assert limit_trace(a, Zd(2)) == 1.0
    assert limit_trace(a, FreeGroup(2)) == 0.0


def test_limit_trace_self_adjoint_square():
    sq = parse_element("1 + s + t") * parse_element("1 + S + T")
    assert limit_trace(sq, Zd(2)) == 3.0
    assert limit_trace(sq, FreeGroup(2)) == 3.0


def test_finite_traces_converge_to_limit():
    """Torus traces agree with the group trace once the words cannot wrap."""
    a = parse_element("3 - s - S - 1/2*ss")
    assert a.max_word_length == 2
    for n in (3, 4, 10):
        assert element_trace(a, build_torus([n])) == limit_trace(a, Zd(1)) == 3.0
    # at n = 2 the length-2 word wraps around and shifts the trace
    assert element_trace(a, build_torus([2])) == 2.5


# ---------------------------------------------------------------------------
# spectral helpers
# ---------------------------------------------------------------------------

def test_circle_laplacian_eigenvalues():
    a = parse_element("2 - s - S")
    m = represent(a, build_torus([4]))
    atoms = spectral_measure(m).atoms
    values = sorted(v for v, _ in atoms)
    np.testing.assert_allclose(values, [0.0, 2.0, 4.0], atol=1e-9)
    weights = {round(v): w for v, w in atoms}
    assert weights == {0: 0.25, 2: 0.5, 4: 0.25}


def test_spectral_measure_moments():
    m = matrix_from(np.diag([1.0, 2.0, 3.0]), symmetric=True)
    sm = spectral_measure(m)
    assert sm.total == pytest.approx(1.0)
    assert sm.moment(1) == pytest.approx(2.0)
    assert sm.moment(2) == pytest.approx((1 + 4 + 9) / 3)


def test_kernel_fraction_circle():
    a = parse_element("2 - s - S")
    for n in (3, 7, 25):
        assert kernel_fraction(a, build_torus([n])) == 1.0 / n


def test_kernel_fraction_invertible_element():
    a = parse_element("3 - s - S")  # spectrum in [1, 5]
    assert kernel_fraction(a, build_torus([8])) == 0.0


def test_schatten_norms():
    m = matrix_from(np.diag([1.0, -2.0, 2.0]), symmetric=True)
    assert schatten_norm(m, 1) == pytest.approx(5.0 / 3.0)
    assert schatten_norm(m, 2) == pytest.approx(np.sqrt(3.0))
    with pytest.raises(InvalidArgument):
        schatten_norm(m, 0.5)


def test_heat_kernel_single_edge():
    lap = matrix_from(np.array([[1.0, -1.0], [-1.0, 1.0]]), symmetric=True)
    for t in (0.1, 1.0, 10.0):
        h = heat_kernel(lap, t)
        assert h.entries[0, 0] == pytest.approx((1 + np.exp(-2 * t)) / 2, rel=1e-12)
    assert heat_kernel(lap, 0.0).entries[0, 0] == pytest.approx(1.0)


def test_heat_kernel_validation():
    with pytest.raises(InvalidArgument):
        heat_kernel(matrix_from(np.eye(2), symmetric=True), -0.5)
    with pytest.raises(InvalidArgument):
        heat_kernel(matrix_from(np.array([[0.0, 1.0], [0.0, 0.0]])), 1.0)


def test_validate_contraction_clamps():
    ck = validate_contraction(2 * np.eye(2))
    assert ck.clamped
    assert ck.max_violation == pytest.approx(1.0)
    np.testing.assert_allclose(ck.matrix, np.eye(2), atol=1e-12)


def test_validate_contraction_accepts_projection():
    q = np.full((2, 2), 0.5)
    ck = validate_contraction(q)
    assert not ck.clamped
    assert ck.max_violation <= 1e-12
    np.testing.assert_allclose(ck.matrix, q, atol=0)
