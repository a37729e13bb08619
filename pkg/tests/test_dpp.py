"""Determinantal measures: exact tables, cylinders, and the sequential sampler."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from detgraph import (
    CapacityExceeded,
    DeterminantalMeasure,
    InvalidArgument,
    NumericalFailure,
    SubsetDistribution,
    complete_graph,
    cylinder_prob,
    exact_distribution,
    rational_cylinder,
    rational_transfer_current,
    sample,
    sample_mask,
    ust_measure,
)
from detgraph.rng import RandomStream


def bernoulli_kernel(ps):
    return DeterminantalMeasure(np.diag(np.asarray(ps, dtype=float)))


@pytest.mark.parametrize(
    "kernel",
    [
        np.array([[0.5, 0.6], [0.4, 0.5]]),  # not symmetric
        np.diag([1.5, 0.5]),                 # eigenvalue above one
        np.diag([-0.2, 0.5]),                # eigenvalue below zero
        np.zeros((2, 3)),                    # not square
    ],
)
def test_kernel_validation(kernel):
    with pytest.raises(InvalidArgument):
        DeterminantalMeasure(kernel)


def test_kernel_is_frozen():
    arr = np.diag([0.5, 0.25])
    meas = DeterminantalMeasure(arr)
    arr[0, 0] = 0.9
    assert meas.kernel[0, 0] == 0.5
    assert not meas.kernel.flags.writeable


def test_ground_labels():
    meas = DeterminantalMeasure(np.diag([0.5, 0.5]), ground_labels=[3, 8])
    assert meas.ground_labels == (3, 8)
    assert meas.size == 2
    with pytest.raises(InvalidArgument):
        DeterminantalMeasure(np.diag([0.5]), ground_labels=[1, 2])


def test_complement_flips_kernel():
    meas = DeterminantalMeasure(np.diag([0.3, 0.9]))
    comp = meas.complement()
    np.testing.assert_allclose(comp.kernel, np.diag([0.7, 0.1]), atol=1e-15)
    assert comp.ground_labels == meas.ground_labels


def test_independent_sites_table():
    d = exact_distribution(bernoulli_kernel([0.5, 0.25]))
    np.testing.assert_allclose(d.probs, [0.375, 0.375, 0.125, 0.125], atol=1e-15)
    assert d.max_clamp == 0.0
    assert d.mean_size() == pytest.approx(0.75)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=5))
def test_diagonal_kernel_is_product_law(ps):
    d = exact_distribution(bernoulli_kernel(ps))
    n = len(ps)
    for mask in range(1 << n):
        expected = 1.0
        for i in range(n):
            expected *= ps[i] if (mask >> i) & 1 else 1.0 - ps[i]
        assert d.prob(mask) == pytest.approx(expected, abs=1e-12)


def test_distribution_sums_to_one():
    rng = RandomStream(99)
    for trial in range(10):
        s = rng.child(trial)
        diag = s.uniforms(4)
        d = exact_distribution(bernoulli_kernel(diag))
        assert abs(d.probs.sum() - 1.0) <= 1e-12
        np.testing.assert_allclose(d.inclusion_marginals(), diag, atol=1e-12)


def test_cylinder_matches_principal_minor():
    y = np.array([[float(x) for x in row] for row in
                  rational_transfer_current(complete_graph(3))])
    meas = DeterminantalMeasure(y)
    assert cylinder_prob(meas, [0], []) == pytest.approx(2 / 3, abs=1e-12)
    assert cylinder_prob(meas, [0, 1], []) == pytest.approx(1 / 3, abs=1e-12)
    assert cylinder_prob(meas, [], [0]) == pytest.approx(1 / 3, abs=1e-12)
    with pytest.raises(InvalidArgument):
        cylinder_prob(meas, [1], [1])


def test_cylinders_against_rational_oracle():
    """Every inclusion/exclusion pattern agrees with exact rational transport."""
    g = complete_graph(3)
    yq = rational_transfer_current(g)
    meas = DeterminantalMeasure(np.array([[float(x) for x in row] for row in yq]))
    d = exact_distribution(meas)
    for inc_mask in range(8):
        for exc_mask in range(8):
            if inc_mask & exc_mask:
                continue
            inc = [i for i in range(3) if (inc_mask >> i) & 1]
            exc = [i for i in range(3) if (exc_mask >> i) & 1]
            expected = float(rational_cylinder(yq, inc, exc))
            assert cylinder_prob(meas, inc, exc) == pytest.approx(expected, abs=1e-12)
            via_table = sum(
                d.prob(m)
                for m in range(8)
                if (m & inc_mask) == inc_mask and not (m & exc_mask)
            )
            assert via_table == pytest.approx(expected, abs=1e-12)


def test_complement_duality():
    rng = RandomStream(17)
    q = np.diag(rng.uniforms(4))
    d = exact_distribution(DeterminantalMeasure(q))
    dc = exact_distribution(DeterminantalMeasure(np.eye(4) - q))
    full = (1 << 4) - 1
    for mask in range(1 << 4):
        assert d.prob(mask) == pytest.approx(dc.prob(full ^ mask), abs=1e-12)


def test_exact_table_cap():
    with pytest.raises(CapacityExceeded):
        exact_distribution(DeterminantalMeasure(0.5 * np.eye(15)))


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def test_projection_kernel_has_fixed_sample_size():
    meas = ust_measure(complete_graph(4))  # rank-3 projection
    rng = RandomStream(5)
    for i in range(200):
        assert len(sample(meas, rng.child(i))) == 3


def test_sample_positions_sorted_and_mask_consistent():
    meas = bernoulli_kernel([0.5, 0.5, 0.5])
    rng = RandomStream(6)
    for i in range(50):
        pos = sample(meas, rng.child(i))
        assert list(pos) == sorted(pos)
        mask = sample_mask(meas, rng.child(i))
        assert mask == sum(1 << p for p in pos)


def test_triangle_tree_frequencies():
    """10^5 draws from the triangle law stay within 4 sigma of uniform."""
    meas = ust_measure(complete_graph(3))
    rng = RandomStream(7)
    n = 100_000
    counts = {}
    for i in range(n):
        pos = sample(meas, rng.child(i))
        counts[pos] = counts.get(pos, 0) + 1
    assert set(counts) == {(0, 1), (0, 2), (1, 2)}
    sigma = np.sqrt(n * (1 / 3) * (2 / 3))
    for c in counts.values():
        assert abs(c - n / 3) <= 4 * sigma


def test_sampler_matches_exact_marginals():
    rng = RandomStream(8)
    frame = np.linalg.qr(rng.uniforms(16).reshape(4, 4) - 0.5)[0]
    q = frame @ np.diag([0.9, 0.6, 0.3, 0.1]) @ frame.T
    q = (q + q.T) / 2
    meas = DeterminantalMeasure(q)
    hits = np.zeros(4)
    n = 20_000
    for i in range(n):
        for p in sample(meas, rng.child(i)):
            hits[p] += 1
    np.testing.assert_allclose(hits / n, np.diag(q), atol=0.02)


# ---------------------------------------------------------------------------
# the distribution container
# ---------------------------------------------------------------------------

def test_event_prob_sums_masks():
    d = exact_distribution(bernoulli_kernel([0.5, 0.25]))
    assert d.event_prob([1, 3]) == pytest.approx(0.5)
    assert d.event_prob(range(4)) == pytest.approx(1.0)


def test_csv_round_trip(tmp_path):
    d = exact_distribution(bernoulli_kernel([0.4, 0.7, 0.1]))
    path = tmp_path / "table.csv"
    d.to_csv(path)
    back = SubsetDistribution.from_csv(path, d.ground_labels)
    assert back.ground_labels == d.ground_labels
    np.testing.assert_array_equal(back.probs, d.probs)


def test_from_pairs_validation():
    d = SubsetDistribution.from_pairs([0, 1], {0: 0.5, 3: 0.5})
    assert d.prob(0) == 0.5 and d.prob(3) == 0.5
    with pytest.raises(NumericalFailure):
        SubsetDistribution.from_pairs([0, 1], {0: 0.5, 3: 0.6})
    with pytest.raises(InvalidArgument):
        SubsetDistribution.from_pairs([0], {4: 1.0})
