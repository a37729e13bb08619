"""Group-ring elements represented as matrices on Schreier graphs.

Words are letter strings: a lowercase letter names a generator symbol and the
matching uppercase letter its inverse (for self-inverse generator sets the two
resolve to the same symbol). Free reduction cancels adjacent inverse pairs,
which is valid in every quotient group, so group-ring algebra done here is
sound for any Schreier graph the element is later represented on.

A word w acts on vertices on the right; its matrix has M[v, v.w] = 1, so the
map w -> M(w) is multiplicative and the normalized trace of M(w) is the fixed
-point fraction of w.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import CapacityExceeded, InvalidArgument, NumericalFailure
from .schreier import SchreierGraph, paired_generators

GROUND_CAP = 3000
SYMMETRY_TOL = 1e-12
_MOMENT_CHECK_MAX_N = 64  # beyond this, double-precision roundoff of either
# route can exceed the 1e-9 self-check tolerance


def free_reduce(letters: str) -> str:
    """Cancel adjacent case-swapped pairs (xX or Xx) until stable."""
    stack: List[str] = []
    for ch in letters:
        if not ch.isalpha():
            raise InvalidArgument(f"invalid word character {ch!r}")
        if stack and stack[-1] == ch.swapcase():
            stack.pop()
        else:
            stack.append(ch)
    return "".join(stack)


@dataclass(frozen=True)
class GroupWord:
    letters: str

    def __post_init__(self):
        for ch in self.letters:
            if not ch.isalpha():
                raise InvalidArgument(f"invalid word character {ch!r}")

    def reduced(self) -> "GroupWord":
        return GroupWord(free_reduce(self.letters))

    def inverse(self) -> "GroupWord":
        return GroupWord(self.letters[::-1].swapcase())

    @property
    def length(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return self.letters if self.letters else "1"


Coeff = Union[int, Fraction, float]


def _coerce_coeff(c: Coeff):
    if isinstance(c, bool):
        raise InvalidArgument("boolean is not a coefficient")
    if isinstance(c, (int, Fraction)):
        return Fraction(c)
    if isinstance(c, float):
        return c
    raise InvalidArgument(f"unsupported coefficient type {type(c).__name__}")


@dataclass(frozen=True)
class GroupRingElement:
    """Finite formal combination of reduced words with rational/float coefficients."""

    terms: Tuple[Tuple[Union[Fraction, float], GroupWord], ...]

    @staticmethod
    def from_terms(pairs: Iterable[Tuple[Coeff, GroupWord]]) -> "GroupRingElement":
        acc: Dict[str, Union[Fraction, float]] = {}
        for coeff, word in pairs:
            c = _coerce_coeff(coeff)
            w = free_reduce(word.letters)
            if w in acc:
                acc[w] = acc[w] + c
            else:
                acc[w] = c
        cleaned = []
        for w in sorted(acc, key=lambda s: (len(s), s)):
            c = acc[w]
            if c == 0:
                continue
            cleaned.append((c, GroupWord(w)))
        return GroupRingElement(tuple(cleaned))

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def has_integer_coefficients(self) -> bool:
        return all(
            isinstance(c, Fraction) and c.denominator == 1 for c, _ in self.terms
        )

    @property
    def max_word_length(self) -> int:
        return max((w.length for _, w in self.terms), default=0)

    def symbols_used(self) -> Tuple[str, ...]:
        letters = {ch.lower() for _, w in self.terms for ch in w.letters}
        return tuple(sorted(letters))

    def adjoint(self) -> "GroupRingElement":
        return GroupRingElement.from_terms(
            (c, w.inverse()) for c, w in self.terms
        )

    def __add__(self, other: "GroupRingElement") -> "GroupRingElement":
        return GroupRingElement.from_terms(list(self.terms) + list(other.terms))

    def __neg__(self) -> "GroupRingElement":
        return GroupRingElement.from_terms((-c, w) for c, w in self.terms)

    def __sub__(self, other: "GroupRingElement") -> "GroupRingElement":
        return self + (-other)

    def __mul__(self, other: "GroupRingElement") -> "GroupRingElement":
        pairs = []
        for c1, w1 in self.terms:
            for c2, w2 in other.terms:
                pairs.append((c1 * c2, GroupWord(w1.letters + w2.letters)))
        return GroupRingElement.from_terms(pairs)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for c, w in self.terms:
            if w.letters:
                parts.append(f"{c}*{w.letters}" if c != 1 else w.letters)
            else:
                parts.append(str(c))
        return " + ".join(parts)


def parse_element(text: str) -> GroupRingElement:
    """Parse `c1*w1 + c2*w2` (e.g. `2 - s - S`); bare words get coefficient 1."""
    src = text.replace(" ", "")
    if not src:
        raise InvalidArgument("empty group-ring expression")
    # split into signed chunks; a sign with no content yet composes (leading '-')
    chunks: List[Tuple[int, str]] = []
    sign = 1
    buf = ""
    for ch in src:
        if ch in "+-":
            if buf:
                chunks.append((sign, buf))
                buf = ""
                sign = -1 if ch == "-" else 1
            else:
                sign *= -1 if ch == "-" else 1
        else:
            buf += ch
    if not buf:
        raise InvalidArgument(f"trailing sign in {text!r}")
    chunks.append((sign, buf))

    pairs: List[Tuple[Coeff, GroupWord]] = []
    for sgn, chunk in chunks:
        if "*" in chunk:
            coeff_str, _, word_str = chunk.partition("*")
            coeff = _parse_number(coeff_str)
            word = GroupWord(word_str)
        elif chunk.isalpha():
            coeff = Fraction(1)
            word = GroupWord(chunk)
        else:
            coeff = _parse_number(chunk)
            word = GroupWord("")
        pairs.append((sgn * coeff, word))
    return GroupRingElement.from_terms(pairs)


def _parse_number(text: str) -> Union[Fraction, float]:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise InvalidArgument(f"invalid coefficient {text!r}") from None


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OperatorMatrix:
    entries: np.ndarray
    ground_labels: Tuple[int, ...]
    symmetric: bool = False

    def __post_init__(self):
        mat = np.asarray(self.entries, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidArgument("operator matrix must be square")
        if len(self.ground_labels) != mat.shape[0]:
            raise InvalidArgument("ground label count mismatch")
        if self.symmetric and np.max(np.abs(mat - mat.T), initial=0.0) > SYMMETRY_TOL:
            raise InvalidArgument("matrix is not symmetric within 1e-12")
        object.__setattr__(self, "entries", mat)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def matrix_from(entries, labels: Optional[Sequence[int]] = None, symmetric: bool = False) -> OperatorMatrix:
    mat = np.asarray(entries, dtype=np.float64)
    if labels is None:
        labels = range(mat.shape[0])
    return OperatorMatrix(mat, tuple(labels), symmetric=symmetric)


def _entries(m) -> np.ndarray:
    if isinstance(m, OperatorMatrix):
        return m.entries
    return np.asarray(m, dtype=np.float64)


def represent(a: GroupRingElement, g: SchreierGraph) -> OperatorMatrix:
    """Dense matrix of a acting on functions of the vertices."""
    n = g.num_vertices
    if n > GROUND_CAP:
        raise CapacityExceeded(f"dense representation capped at {GROUND_CAP} vertices")
    mat = np.zeros((n, n), dtype=np.float64)
    rows = np.arange(n, dtype=np.int64)
    for coeff, word in a.terms:
        idx = g.generators.word_indices(word.letters)
        targets = g.word_permutation(idx)
        mat[rows, targets] += float(coeff)
    sym = np.max(np.abs(mat - mat.T), initial=0.0) <= SYMMETRY_TOL
    return OperatorMatrix(mat, tuple(range(n)), symmetric=bool(sym))


def word_fixed_fraction(g: SchreierGraph, word: GroupWord) -> float:
    """Fraction of vertices fixed by the word; the normalized trace of its matrix."""
    idx = g.generators.word_indices(word.letters)
    p = g.word_permutation(idx)
    return float(np.count_nonzero(p == np.arange(g.num_vertices))) / g.num_vertices


def element_trace(a: GroupRingElement, g: SchreierGraph) -> float:
    """Normalized trace of represent(a, g), computed from fixed-point fractions.

    Works at any vertex count since no matrix is formed.
    """
    return float(sum(float(c) * word_fixed_fraction(g, w) for c, w in a.terms))


def normalized_trace(m) -> float:
    mat = _entries(m)
    if mat.shape[0] == 0:
        raise InvalidArgument("empty matrix has no normalized trace")
    return float(np.trace(mat) / mat.shape[0])


# ---------------------------------------------------------------------------
# limits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Zd:
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise InvalidArgument("d must be positive")


@dataclass(frozen=True)
class FreeGroup:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise InvalidArgument("k must be positive")


def _check_symbols(a: GroupRingElement, rank: int):
    gens = paired_generators(rank)
    allowed = {s.lower() for s in gens.symbols}
    for letter in a.symbols_used():
        if letter not in allowed:
            raise InvalidArgument(
                f"symbol {letter!r} not among the {rank} standard generators"
            )
    return gens


def limit_trace(a: GroupRingElement, group) -> float:
    """Trace in the limit group: sum of coefficients of words acting as identity."""
    if isinstance(group, Zd):
        gens = _check_symbols(a, group.d)
        base = [s for s in gens.symbols if s.islower()]
        total = Fraction(0)
        total_f = 0.0
        exact = True
        for coeff, word in a.terms:
            exps = [0] * group.d
            for ch in word.letters:
                i = base.index(ch.lower())
                exps[i] += 1 if ch.islower() else -1
            if all(e == 0 for e in exps):
                if isinstance(coeff, Fraction):
                    total += coeff
                else:
                    exact = False
                    total_f += coeff
        return float(total) + total_f
    if isinstance(group, FreeGroup):
        _check_symbols(a, group.k)
        total = Fraction(0)
        total_f = 0.0
        for coeff, word in a.terms:
            if free_reduce(word.letters) == "":
                if isinstance(coeff, Fraction):
                    total += coeff
                else:
                    total_f += coeff
        return float(total) + total_f
    raise InvalidArgument(f"unsupported limit group {group!r}")


# ---------------------------------------------------------------------------
# spectral quantities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralMeasure:
    atoms: Tuple[Tuple[float, float], ...]  # (eigenvalue, weight)

    def moment(self, k: int) -> float:
        return float(sum(w * v**k for v, w in self.atoms))

    @property
    def total(self) -> float:
        return float(sum(w for _, w in self.atoms))


def spectral_measure(m) -> SpectralMeasure:
    """Empirical eigenvalue measure of a symmetric matrix, equal eigenvalues merged."""
    mat = _entries(m)
    n = mat.shape[0]
    if n == 0:
        raise InvalidArgument("empty matrix")
    if np.max(np.abs(mat - mat.T), initial=0.0) > SYMMETRY_TOL:
        raise InvalidArgument("matrix is not symmetric within 1e-12")
    vals = np.linalg.eigvalsh(mat)
    scale = max(1.0, float(np.max(np.abs(vals), initial=0.0)))
    merge_tol = 1e-11 * scale
    atoms: List[Tuple[float, float]] = []
    start = 0
    for i in range(1, n + 1):
        if i == n or vals[i] - vals[i - 1] > merge_tol:
            block = vals[start:i]
            atoms.append((float(np.mean(block)), len(block) / n))
            start = i
    measure = SpectralMeasure(tuple(atoms))
    if abs(measure.total - 1.0) > 1e-12:
        raise NumericalFailure("spectral weights do not sum to 1")
    if n <= _MOMENT_CHECK_MAX_N:
        power = np.eye(n)
        for k in range(1, 7):
            power = power @ mat
            if abs(measure.moment(k) - np.trace(power) / n) > 1e-9:
                raise NumericalFailure(f"moment identity failed at k={k}")
    return measure


def kernel_fraction(a: GroupRingElement, g: SchreierGraph, tol: float = 1e-9) -> float:
    """Normalized kernel dimension of the represented operator.

    Singular values below tol * max(1, sigma_max) count as zero.
    """
    if not a.has_integer_coefficients:
        raise InvalidArgument("kernel_fraction requires integer coefficients")
    mat = represent(a, g).entries
    svals = np.linalg.svd(mat, compute_uv=False)
    cutoff = tol * max(1.0, float(svals[0]) if svals.size else 1.0)
    return int(np.count_nonzero(svals < cutoff)) / g.num_vertices


def schatten_norm(m, p) -> float:
    """Normalized Schatten norm: mean singular value (p=1), root mean square
    (p=2), or largest (p=inf)."""
    mat = _entries(m)
    svals = np.linalg.svd(mat, compute_uv=False)
    if p == 1:
        return float(np.mean(svals))
    if p == 2:
        return float(np.sqrt(np.mean(svals**2)))
    if p in (np.inf, "inf", "oo"):
        return float(svals[0]) if svals.size else 0.0
    raise InvalidArgument("p must be 1, 2, or inf")


def heat_kernel(a, t: float) -> OperatorMatrix:
    """exp(-A t) for symmetric positive semidefinite A."""
    if t < 0:
        raise InvalidArgument("time must be nonnegative")
    mat = _entries(a)
    if np.max(np.abs(mat - mat.T), initial=0.0) > SYMMETRY_TOL:
        raise InvalidArgument("matrix is not symmetric within 1e-12")
    vals, vecs = np.linalg.eigh(mat)
    scale = max(1.0, float(np.max(np.abs(vals), initial=0.0)))
    if vals.size and vals[0] < -1e-9 * scale:
        raise InvalidArgument("matrix is not positive semidefinite")
    out = (vecs * np.exp(-np.clip(vals, 0.0, None) * t)) @ vecs.T
    out = 0.5 * (out + out.T)
    return OperatorMatrix(out, tuple(range(mat.shape[0])), symmetric=True)


@dataclass(frozen=True)
class ContractionCheck:
    matrix: np.ndarray
    clamped: bool
    max_violation: float


def validate_contraction(m, tol: float = 1e-9) -> ContractionCheck:
    """Accept a symmetric matrix with spectrum in [-tol, 1+tol]; otherwise
    return the eigenvalue-clipped nearest contraction and the max violation."""
    mat = _entries(m)
    if np.max(np.abs(mat - mat.T), initial=0.0) > SYMMETRY_TOL:
        raise InvalidArgument("matrix is not symmetric within 1e-12")
    vals, vecs = np.linalg.eigh(mat)
    below = float(max(0.0, -np.min(vals, initial=0.0)))
    above = float(max(0.0, np.max(vals, initial=0.0) - 1.0))
    violation = max(below, above)
    if violation <= tol:
        return ContractionCheck(mat, False, violation)
    clipped = (vecs * np.clip(vals, 0.0, 1.0)) @ vecs.T
    clipped = 0.5 * (clipped + clipped.T)
    return ContractionCheck(clipped, True, violation)
