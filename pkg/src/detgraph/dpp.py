"""Determinantal probability measures over finite ground sets.

A positive contraction kernel Q determines the unique law with
P[A subset of the sample] = det(Q restricted to A); exclusion constraints come
from the signed determinant of Q with -1 added on the excluded diagonal.
Exact subset tables are available up to 14 ground elements, and exact draws
come from the eigendecomposition sampler in the compiled kernels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import CapacityExceeded, InvalidArgument, NumericalFailure
from .kernels import dpp_sample_core
from .operators import OperatorMatrix
from .rng import as_stream

EXACT_TABLE_CAP = 14
CROSSCHECK_CAP = 6  # every cylinder call at or below this size is re-derived
HARD_CLAMP = 1e-8
EIGEN_TOL = 1e-12


def _kernel_entries(kernel) -> np.ndarray:
    if isinstance(kernel, OperatorMatrix):
        return np.array(kernel.entries, dtype=np.float64)
    return np.array(kernel, dtype=np.float64)


class DeterminantalMeasure:
    """Immutable wrapper around a validated positive-contraction kernel."""

    __slots__ = ("kernel", "ground_labels", "eigenvalues", "eigenvectors")

    def __init__(self, kernel, ground_labels: Optional[Sequence[int]] = None):
        mat = _kernel_entries(kernel)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidArgument("kernel must be square")
        if np.max(np.abs(mat - mat.T), initial=0.0) > EIGEN_TOL:
            raise InvalidArgument("kernel is not symmetric within 1e-12")
        vals, vecs = np.linalg.eigh(mat)
        if vals.size and (vals[0] < -EIGEN_TOL or vals[-1] > 1.0 + EIGEN_TOL):
            raise InvalidArgument(
                f"kernel eigenvalues [{vals[0]:.3e}, {vals[-1]:.3e}] leave [0,1]"
            )
        if ground_labels is None:
            ground_labels = range(mat.shape[0])
        labels = tuple(int(x) for x in ground_labels)
        if len(labels) != mat.shape[0]:
            raise InvalidArgument("ground label count mismatch")
        for arr in (mat, vals, vecs):
            arr.flags.writeable = False
        object.__setattr__(self, "kernel", mat)
        object.__setattr__(self, "ground_labels", labels)
        object.__setattr__(self, "eigenvalues", np.clip(vals, 0.0, 1.0))
        object.__setattr__(self, "eigenvectors", vecs)

    def __setattr__(self, name, value):
        raise AttributeError("DeterminantalMeasure is immutable")

    @property
    def size(self) -> int:
        return self.kernel.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.kernel))

    def inclusion_marginals(self) -> np.ndarray:
        return np.diag(self.kernel).copy()

    def complement(self) -> "DeterminantalMeasure":
        return DeterminantalMeasure(
            np.eye(self.size) - self.kernel, self.ground_labels
        )


def _signed_det(q: np.ndarray, include: Sequence[int], exclude: Sequence[int]) -> float:
    idx = list(include) + list(exclude)
    if not idx:
        return 1.0
    sub = q[np.ix_(idx, idx)].copy()
    k = len(include)
    for j in range(k, len(idx)):
        sub[j, j] -= 1.0
    sign = -1.0 if (len(idx) - k) % 2 else 1.0
    return float(sign * np.linalg.det(sub))


def cylinder_prob(d: DeterminantalMeasure, include: Sequence[int], exclude: Sequence[int]) -> float:
    """P[include inside the sample and exclude disjoint from it].

    Small instances (|include| + |exclude| <= 6) are re-derived by explicit
    inclusion-exclusion over subsets of the excluded set on every call; a
    disagreement beyond 1e-9 raises NumericalFailure.
    """
    inc = sorted(set(int(i) for i in include))
    exc = sorted(set(int(i) for i in exclude))
    if set(inc) & set(exc):
        raise InvalidArgument("include and exclude sets overlap")
    n = d.size
    for i in inc + exc:
        if not 0 <= i < n:
            raise InvalidArgument(f"index {i} outside ground set of size {n}")
    raw = _signed_det(d.kernel, inc, exc)
    if len(inc) + len(exc) <= CROSSCHECK_CAP:
        alt = 0.0
        for r in range(len(exc) + 1):
            for extra in combinations(exc, r):
                term = _signed_det(d.kernel, inc + list(extra), [])
                alt += term if r % 2 == 0 else -term
        if abs(raw - alt) > 1e-9:
            raise NumericalFailure(
                f"cylinder routes disagree: {raw!r} vs inclusion-exclusion {alt!r}"
            )
    if raw < -HARD_CLAMP or raw > 1.0 + HARD_CLAMP:
        raise NumericalFailure(f"cylinder probability {raw!r} outside [0,1]")
    return min(max(raw, 0.0), 1.0)


@dataclass(frozen=True)
class SubsetDistribution:
    """Explicit law over subsets of a small ground set, bitmask indexed."""

    ground_labels: Tuple[int, ...]
    probs: np.ndarray  # length 2^n, nonnegative after clamping
    max_clamp: float = 0.0

    def __post_init__(self):
        n = len(self.ground_labels)
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.shape != (1 << n,):
            raise InvalidArgument("probability table has wrong length")
        if self.max_clamp > HARD_CLAMP:
            raise NumericalFailure(
                f"negative probability clamp {self.max_clamp!r} beyond {HARD_CLAMP}"
            )
        if np.min(arr, initial=0.0) < 0.0:
            raise InvalidArgument("probabilities must be clamped nonnegative")
        total = float(arr.sum())
        if abs(total - 1.0) > 1e-9:
            raise NumericalFailure(f"probabilities sum to {total!r}, not 1")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)

    @property
    def num_sites(self) -> int:
        return len(self.ground_labels)

    def prob(self, mask: int) -> float:
        return float(self.probs[mask])

    def support(self) -> np.ndarray:
        return np.nonzero(self.probs > 0.0)[0]

    def inclusion_marginals(self) -> np.ndarray:
        n = self.num_sites
        masks = np.arange(1 << n, dtype=np.int64)
        out = np.empty(n)
        for i in range(n):
            out[i] = float(self.probs[(masks >> i) & 1 == 1].sum())
        return out

    def mean_size(self) -> float:
        n = self.num_sites
        masks = np.arange(1 << n, dtype=np.int64)
        sizes = np.zeros(1 << n, dtype=np.int64)
        for i in range(n):
            sizes += (masks >> i) & 1
        return float((self.probs * sizes).sum())

    def event_prob(self, masks: Iterable[int]) -> float:
        return float(sum(self.probs[m] for m in set(masks)))

    @staticmethod
    def from_pairs(ground_labels: Sequence[int], pairs: Dict[int, float]) -> "SubsetDistribution":
        n = len(ground_labels)
        arr = np.zeros(1 << n)
        for mask, p in pairs.items():
            if not 0 <= mask < (1 << n):
                raise InvalidArgument(f"mask {mask} out of range")
            arr[mask] += p
        return SubsetDistribution(tuple(int(x) for x in ground_labels), arr)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["mask", "probability"])
            for mask in range(self.probs.shape[0]):
                writer.writerow([mask, repr(float(self.probs[mask]))])

    @staticmethod
    def from_csv(path, ground_labels: Sequence[int]) -> "SubsetDistribution":
        arr = np.zeros(1 << len(ground_labels))
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["mask", "probability"]:
                raise InvalidArgument("unexpected subset-distribution CSV header")
            for mask_str, p_str in reader:
                arr[int(mask_str)] = float(p_str)
        return SubsetDistribution(tuple(int(x) for x in ground_labels), arr)


def exact_distribution(d: DeterminantalMeasure) -> SubsetDistribution:
    """The full 2^n table P[sample = B], by batched signed determinants."""
    n = d.size
    if n > EXACT_TABLE_CAP:
        raise CapacityExceeded(f"exact table limited to {EXACT_TABLE_CAP} sites")
    total = 1 << n
    masks = np.arange(total, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)[None, :]) & 1).astype(np.float64)
    stacked = np.broadcast_to(d.kernel, (total, n, n)).copy()
    diag = np.arange(n)
    stacked[:, diag, diag] -= 1.0 - bits
    dets = np.linalg.det(stacked)
    signs = np.where(((n - bits.sum(axis=1).astype(np.int64)) & 1) == 1, -1.0, 1.0)
    probs = signs * dets
    max_clamp = float(max(0.0, -np.min(probs, initial=0.0)))
    if max_clamp > HARD_CLAMP:
        raise NumericalFailure(f"distribution clamp {max_clamp!r} beyond {HARD_CLAMP}")
    probs = np.clip(probs, 0.0, None)
    return SubsetDistribution(d.ground_labels, probs, max_clamp=max_clamp)


def sample(d: DeterminantalMeasure, rng) -> Tuple[int, ...]:
    """One exact draw; returns the sorted tuple of selected indices."""
    stream = as_stream(rng)
    n = d.size
    mask = np.zeros(n, dtype=np.int64)
    evecs = np.ascontiguousarray(d.eigenvectors, dtype=np.float64)
    evals = np.ascontiguousarray(d.eigenvalues, dtype=np.float64)
    size, leftover, counter = dpp_sample_core(
        evecs, evals, np.uint64(stream.key), np.uint64(stream.counter), mask
    )
    stream.counter = int(counter)
    if leftover != 0:
        raise NumericalFailure(f"sampler finished with leftover rank {leftover}")
    return tuple(int(i) for i in np.nonzero(mask)[0])


def sample_mask(d: DeterminantalMeasure, rng) -> int:
    """One draw encoded as a bitmask over ground positions."""
    return sum(1 << i for i in sample(d, rng))
