"""Deterministic randomness and numba/numpy backend agreement."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from detgraph import (
    DeterminantalMeasure,
    InvalidArgument,
    backend_name,
    complete_graph,
    dbar,
    exact_distribution,
    grid_graph,
    monotone_coupling,
    sample_mask,
    torus_graph,
    wilson_sample,
)
from detgraph.forests import fsf_L_kernel, torus_square_cycle_space
from detgraph.rng import RandomStream


# ---------------------------------------------------------------------------
# the seeded stream
# ---------------------------------------------------------------------------

def test_stream_is_deterministic():
    a, b = RandomStream(42), RandomStream(42)
    assert [a.next_u64() for _ in range(5)] == [b.next_u64() for _ in range(5)]
    assert RandomStream(42).uniform() != RandomStream(43).uniform()


def test_uniforms_match_scalar_calls():
    xs = RandomStream(7).uniforms(50)
    one_by_one = RandomStream(7)
    np.testing.assert_array_equal(xs, [one_by_one.uniform() for _ in range(50)])


def test_uniforms_in_unit_interval():
    xs = RandomStream(8).uniforms(10_000)
    assert xs.min() >= 0.0
    assert xs.max() < 1.0
    assert abs(xs.mean() - 0.5) < 0.02


def test_child_streams_are_stable_and_distinct():
    root = RandomStream(9)
    assert root.child(3).next_u64() == RandomStream(9).child(3).next_u64()
    draws = {root.child(tag).next_u64() for tag in range(200)}
    assert len(draws) == 200
    assert root.child(1).next_u64() != root.child(2).next_u64()


def test_child_does_not_disturb_parent():
    a, b = RandomStream(10), RandomStream(10)
    a.child(5)
    assert a.uniform() == b.uniform()


def test_integers_bounds_and_determinism():
    xs = RandomStream(11).integers(1_000, 7)
    assert set(np.unique(xs)).issubset(set(range(7)))
    np.testing.assert_array_equal(xs, RandomStream(11).integers(1_000, 7))
    with pytest.raises(InvalidArgument):
        RandomStream(11).integers(3, 0)


def test_permutation():
    p = RandomStream(12).permutation(40)
    assert sorted(p) == list(range(40))
    q = RandomStream(13).permutation(40)
    assert list(p) != list(q)


def test_seed_validation():
    with pytest.raises(InvalidArgument):
        RandomStream(-1)
    with pytest.raises(InvalidArgument):
        RandomStream(2 ** 64)
    with pytest.raises(InvalidArgument):
        RandomStream(1.5)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 64 - 1))
def test_any_seed_yields_valid_uniform(seed):
    x = RandomStream(seed).uniform()
    assert 0.0 <= x < 1.0


# ---------------------------------------------------------------------------
# backend dispatch
# ---------------------------------------------------------------------------

def test_backend_env_switch(monkeypatch):
    monkeypatch.setenv("DETGRAPH_BACKEND", "numpy")
    assert backend_name() == "numpy"
    monkeypatch.setenv("DETGRAPH_BACKEND", "auto")
    assert backend_name() in ("numba", "numpy")
    monkeypatch.setenv("DETGRAPH_BACKEND", "bogus")
    with pytest.warns(UserWarning):
        assert backend_name() in ("numba", "numpy")


def both_backends(monkeypatch, fn):
    results = {}
    for name in ("numpy", "numba"):
        monkeypatch.setenv("DETGRAPH_BACKEND", name)
        results[name] = fn()
    return results["numpy"], results["numba"]


def test_wilson_identical_across_backends(monkeypatch):
    g = grid_graph(5, 5)
    a, b = both_backends(
        monkeypatch,
        lambda: [wilson_sample(g, RandomStream(21).child(i)) for i in range(20)],
    )
    assert a == b


def test_sampler_identical_across_backends(monkeypatch):
    g = torus_graph(3)
    meas = fsf_L_kernel(g, 4, cycle_space=torus_square_cycle_space(g, 3))
    a, b = both_backends(
        monkeypatch,
        lambda: [sample_mask(meas, RandomStream(22).child(i)) for i in range(40)],
    )
    assert a == b


def test_transport_identical_across_backends(monkeypatch):
    d1 = exact_distribution(DeterminantalMeasure(np.diag([0.2, 0.8, 0.5, 0.1])))
    d2 = exact_distribution(DeterminantalMeasure(np.diag([0.6, 0.4, 0.5, 0.3])))
    (va, ca), (vb, cb) = both_backends(monkeypatch, lambda: dbar(d1, d2))
    assert va == vb
    assert ca.atoms == cb.atoms


def test_flow_identical_across_backends(monkeypatch):
    d1 = exact_distribution(DeterminantalMeasure(np.diag([0.2, 0.3, 0.1])))
    d2 = exact_distribution(DeterminantalMeasure(np.diag([0.7, 0.5, 0.4])))
    a, b = both_backends(monkeypatch, lambda: monotone_coupling(d1, d2))
    assert a.atoms == b.atoms


def test_exact_table_identical_across_backends(monkeypatch):
    meas = DeterminantalMeasure(np.diag([0.25, 0.5, 0.75]))
    a, b = both_backends(monkeypatch, lambda: exact_distribution(meas).probs)
    np.testing.assert_array_equal(a, b)
