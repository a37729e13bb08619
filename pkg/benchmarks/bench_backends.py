"""Timing and agreement comparison of the jit and numpy kernel backends.

Runs identical seeded workloads under ``DETGRAPH_BACKEND=numba`` and
``DETGRAPH_BACKEND=numpy`` (dispatch happens at call time), checks the outputs
are bit-identical, and prints a wall-time table. Usage::

    python3 benchmarks/bench_backends.py [--repeat 3]
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np

from detgraph.backend import HAS_NUMBA
from detgraph.coupling import dbar, monotone_coupling, Coupling
from detgraph.dpp import DeterminantalMeasure, exact_distribution, sample
from detgraph.forests import fsf_L_kernel, torus_graph, torus_square_cycle_space, wilson_sample
from detgraph.rng import RandomStream


def _workload_wilson():
    g = torus_graph(12)
    stream = RandomStream(2024)
    return tuple(wilson_sample(g, stream) for _ in range(40))


def _workload_dpp():
    g = torus_graph(6)
    meas = fsf_L_kernel(g, 4, cycle_space=torus_square_cycle_space(g, 6))
    stream = RandomStream(7)
    return tuple(sample(meas, stream) for _ in range(40))


def _workload_transport():
    stream = RandomStream(99)
    values = []
    for trial in range(6):
        s = stream.child(trial)
        d1 = exact_distribution(DeterminantalMeasure(np.diag(s.uniforms(8))))
        d2 = exact_distribution(DeterminantalMeasure(np.diag(s.uniforms(8))))
        values.append(dbar(d1, d2)[0])
    return tuple(values)


def _workload_flow():
    stream = RandomStream(41)
    outcomes = []
    for trial in range(6):
        s = stream.child(trial)
        base = np.diag(s.uniforms(8) * 0.5)
        bump = np.diag(s.uniforms(8) * 0.4)
        d1 = exact_distribution(DeterminantalMeasure(base))
        d2 = exact_distribution(DeterminantalMeasure(base + bump))
        result = monotone_coupling(d1, d2)
        assert isinstance(result, Coupling)
        outcomes.append(result.atoms)
    return tuple(outcomes)


WORKLOADS = [
    ("wilson (40 trees, 12x12 torus)", _workload_wilson),
    ("dpp sample (40 draws, 6x6 torus forests)", _workload_dpp),
    ("transport (6 exact dbar, 8 sites)", _workload_transport),
    ("max-flow (6 monotone couplings, 8 sites)", _workload_flow),
]


def run(repeat: int) -> int:
    if not HAS_NUMBA:
        print("numba is not importable; nothing to compare")
        return 1
    results = {}
    timings = {}
    for backend in ("numba", "numpy"):
        os.environ["DETGRAPH_BACKEND"] = backend
        for name, fn in WORKLOADS:
            fn()  # warm-up: jit compilation / cache priming
            best = float("inf")
            for _ in range(repeat):
                t0 = time.perf_counter()
                out = fn()
                best = min(best, time.perf_counter() - t0)
            timings[(backend, name)] = best
            results[(backend, name)] = out
    width = max(len(name) for name, _ in WORKLOADS)
    print(f"{'workload'.ljust(width)}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}  agree")
    all_agree = True
    for name, _ in WORKLOADS:
        t_nb = timings[("numba", name)]
        t_np = timings[("numpy", name)]
        agree = results[("numba", name)] == results[("numpy", name)]
        all_agree &= agree
        print(
            f"{name.ljust(width)}  {t_nb:>9.4f}s  {t_np:>9.4f}s  "
            f"{t_np / t_nb:>7.1f}x  {'yes' if agree else 'NO'}"
        )
    if not all_agree:
        print("BACKEND MISMATCH: the two paths produced different results")
        return 1
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    raise SystemExit(run(parser.parse_args().repeat))
