"""Exact arithmetic on zero row-sum matrices and their Lie algebra closures.

All matrices here carry integer entries and zero row sums, so every question
about spans and brackets can be answered exactly. Independence bookkeeping
runs over the off-diagonal coordinates: a zero row-sum matrix is determined
by its off-diagonal part, and in those coordinates the edge generators form
the standard lattice basis.

Arithmetic stays in int64 while safe and falls back to Python integers when
a product could overflow, so results are exact at any coefficient size.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from math import gcd
from typing import Iterable, Mapping

import numpy as np

from .digraph import Digraph
from .errors import (
    DegenerateBracket,
    EmptyGeneratorSet,
    InputFormatError,
    InvalidIndices,
    NotZeroRowSum,
    RankMismatch,
    SizeMismatch,
)

__all__ = [
    "ZeroRowSumMatrix",
    "EdgeGenerator",
    "GeneratorCombination",
    "LieBasis",
    "edge_generator",
    "edge_generators",
    "bracket",
    "structural_bracket",
    "dense_to_combination",
    "lie_closure",
    "span_equal",
    "span_contains",
    "IntRowEchelon",
    "format_basis_text",
    "parse_basis_text",
    "load_basis",
]

# int64 products are computed only when operands fit under this bound;
# otherwise the computation switches to Python integers.
_INT64_SAFE = 2**62


def _as_int_array(entries) -> np.ndarray:
    arr = np.asarray(entries)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise SizeMismatch(f"expected a square matrix, got shape {arr.shape}")
    if arr.dtype == object:
        if not all(isinstance(x, int) for x in arr.reshape(-1)):
            raise NotZeroRowSum("entries must be integers")
        return arr
    if not np.issubdtype(arr.dtype, np.integer):
        rounded = np.rint(arr)
        if not np.array_equal(rounded, arr):
            raise NotZeroRowSum("entries must be integers")
        arr = rounded
    return arr.astype(np.int64, copy=True)


class ZeroRowSumMatrix:
    """Square integer matrix whose rows each sum to zero."""

    __slots__ = ("array",)

    def __init__(self, entries):
        arr = _as_int_array(entries)
        sums = arr.sum(axis=1)
        if np.any(sums != 0):
            bad = int(np.flatnonzero(sums)[0]) + 1
            raise NotZeroRowSum(f"row {bad} sums to {sums[bad - 1]}, expected 0")
        arr.setflags(write=False)
        object.__setattr__(self, "array", arr)

    @property
    def size(self) -> int:
        return self.array.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ZeroRowSumMatrix):
            return NotImplemented
        return self.size == other.size and np.array_equal(self.array, other.array)

    def __hash__(self) -> int:
        return hash((self.size, self.array.tobytes() if self.array.dtype != object
                     else tuple(map(int, self.array.reshape(-1)))))

    def __setattr__(self, name, value):
        raise AttributeError("ZeroRowSumMatrix is immutable")

    def __repr__(self) -> str:
        return f"ZeroRowSumMatrix({self.array.tolist()})"


@dataclass(frozen=True)
class EdgeGenerator:
    """Symbolic generator for edge i -> j on ``size`` vertices.

    Densifies to a matrix whose only nonzero row is row i: -1 in column i
    and +1 in column j.
    """

    i: int
    j: int
    size: int

    def __post_init__(self):
        if self.i == self.j:
            raise InvalidIndices(f"edge generator needs i != j, got {self.i}")
        if not (1 <= self.i <= self.size and 1 <= self.j <= self.size):
            raise InvalidIndices(
                f"edge {self.i}->{self.j} out of range 1..{self.size}")

    def dense(self) -> ZeroRowSumMatrix:
        return edge_generator(self.i, self.j, self.size)


def edge_generator(i: int, j: int, size: int) -> ZeroRowSumMatrix:
    """The matrix -e_i e_i^T + e_i e_j^T (1-based indices)."""
    gen = EdgeGenerator.__new__(EdgeGenerator)
    object.__setattr__(gen, "i", i)
    object.__setattr__(gen, "j", j)
    object.__setattr__(gen, "size", size)
    EdgeGenerator.__post_init__(gen)
    arr = np.zeros((size, size), dtype=np.int64)
    arr[i - 1, i - 1] = -1
    arr[i - 1, j - 1] = 1
    return ZeroRowSumMatrix(arr)


def edge_generators(g: Digraph) -> list[EdgeGenerator]:
    """One generator per edge of g, sorted by (i, j)."""
    return [EdgeGenerator(i, j, g.num_vertices) for i, j in sorted(g.edges)]


class GeneratorCombination:
    """Integer linear combination of edge generators, keyed by (i, j)."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple[int, int], int] = ()):
        clean: dict[tuple[int, int], int] = {}
        for (i, j), c in dict(terms).items():
            if i == j:
                raise InvalidIndices(f"combination key ({i}, {j}) has i = j")
            c = int(c)
            if c != 0:
                clean[(int(i), int(j))] = c
        object.__setattr__(self, "terms", clean)

    def dense(self, size: int) -> ZeroRowSumMatrix:
        huge = any(abs(c) >= _INT64_SAFE // 2 for c in self.terms.values())
        arr = np.zeros((size, size), dtype=object if huge else np.int64)
        for (i, j), c in self.terms.items():
            if not (1 <= i <= size and 1 <= j <= size):
                raise InvalidIndices(f"edge {i}->{j} out of range 1..{size}")
            arr[i - 1, j - 1] += c
            arr[i - 1, i - 1] -= c
        return ZeroRowSumMatrix(arr)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GeneratorCombination):
            return NotImplemented
        return self.terms == other.terms

    def __setattr__(self, name, value):
        raise AttributeError("GeneratorCombination is immutable")

    def __repr__(self) -> str:
        items = ", ".join(f"A_{i}{j}: {c:+d}" for (i, j), c in sorted(self.terms.items()))
        return f"GeneratorCombination({{{items}}})"


def dense_to_combination(m: ZeroRowSumMatrix) -> GeneratorCombination:
    """Expand m over edge generators; coefficients are the off-diagonal entries."""
    n = m.size
    terms = {}
    for i in range(n):
        for j in range(n):
            if i != j and m.array[i, j]:
                terms[(i + 1, j + 1)] = int(m.array[i, j])
    return GeneratorCombination(terms)


def _bracket_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.dtype == object or b.dtype == object:
        return a @ b - b @ a
    bound = int(np.abs(a).max(initial=0)) * int(np.abs(b).max(initial=0)) * a.shape[0]
    if 2 * bound >= _INT64_SAFE:
        ao = a.astype(object)
        bo = b.astype(object)
        return ao @ bo - bo @ ao
    return a @ b - b @ a


def bracket(a: ZeroRowSumMatrix, b: ZeroRowSumMatrix) -> ZeroRowSumMatrix:
    """Commutator ab - ba; zero row sums are preserved."""
    if a.size != b.size:
        raise SizeMismatch(f"sizes differ: {a.size} vs {b.size}")
    return ZeroRowSumMatrix(_bracket_arrays(a.array, b.array))


def _structural_bracket_terms(i: int, j: int, p: int, q: int) -> dict[tuple[int, int], int]:
    """Case table for [A_ij, A_pq]; raises on the 2-cycle pair."""
    if (i, j) == (p, q):
        return {}
    if j == p and q == i:
        raise DegenerateBracket(
            f"[A_{i}{j}, A_{j}{i}] is not a combination of the two generators; "
            "use the dense bracket")
    if i == p:
        return {(i, j): 1, (i, q): -1}
    if j == p:
        return {(i, q): 1, (i, j): -1}
    if q == i:
        return {(p, i): 1, (p, j): -1}
    return {}


def structural_bracket(a: EdgeGenerator, b: EdgeGenerator) -> GeneratorCombination:
    """Symbolic commutator of two edge generators.

    Covers every index pattern except the 2-cycle pair (a = A_ij, b = A_ji),
    which raises DegenerateBracket; the dense bracket handles that case.
    """
    if a.size != b.size:
        raise SizeMismatch(f"sizes differ: {a.size} vs {b.size}")
    return GeneratorCombination(_structural_bracket_terms(a.i, a.j, b.i, b.j))


# -- exact rank bookkeeping ------------------------------------------------

def _gcd_normalize(row: np.ndarray) -> np.ndarray:
    """Divide by the gcd of the entries and make the pivot positive."""
    if row.dtype == object:
        g = 0
        for x in row:
            g = gcd(g, abs(int(x)))
            if g == 1:
                break
        if g > 1:
            row = np.array([int(x) // g for x in row], dtype=object)
        nz = [k for k, x in enumerate(row) if x != 0]
        if nz and row[nz[0]] < 0:
            row = np.array([-int(x) for x in row], dtype=object)
        if all(abs(int(x)) < _INT64_SAFE for x in row):
            row = row.astype(np.int64)
        return row
    g = int(np.gcd.reduce(np.abs(row)))
    if g > 1:
        row = row // g
    nz = np.flatnonzero(row)
    if nz.size and row[nz[0]] < 0:
        row = -row
    return row


def _combine(v: np.ndarray, r: np.ndarray, vp: int, rp: int) -> np.ndarray:
    """rp * v - vp * r, escalating to Python integers when int64 could wrap."""
    if v.dtype != object and r.dtype != object:
        bound = abs(rp) * int(np.abs(v).max(initial=0)) + abs(vp) * int(np.abs(r).max(initial=0))
        if bound < _INT64_SAFE:
            return rp * v - vp * r
    vo = v.astype(object) if v.dtype != object else v
    ro = r.astype(object) if r.dtype != object else r
    return rp * vo - vp * ro


class IntRowEchelon:
    """Incremental exact reduced row-echelon form over integer vectors.

    Rows are gcd-reduced with a positive pivot and kept ordered by pivot
    column; every pivot column is zero in all other rows, so a single
    elimination pass decides membership.
    """

    __slots__ = ("width", "rows", "pivots")

    def __init__(self, width: int):
        self.width = width
        self.rows: list[np.ndarray] = []
        self.pivots: list[int] = []

    @property
    def rank(self) -> int:
        return len(self.rows)

    def residual(self, vec: np.ndarray) -> np.ndarray:
        """Remainder of vec after eliminating against the stored rows."""
        v = vec
        for p, r in zip(self.pivots, self.rows):
            vp = v[p]
            if vp != 0:
                v = _gcd_normalize(_combine(v, r, int(vp), int(r[p])))
        return v

    def insert(self, vec: np.ndarray) -> bool:
        """Adjoin vec if independent of the stored rows; True when rank grew."""
        if vec.shape != (self.width,):
            raise SizeMismatch(f"expected width {self.width}, got {vec.shape}")
        v = self.residual(vec if vec.dtype == object else vec.astype(np.int64))
        nz = np.flatnonzero(v != 0) if v.dtype == object else np.flatnonzero(v)
        if nz.size == 0:
            return False
        v = _gcd_normalize(v)
        pivot = int(nz[0])
        # clear the new pivot column from the existing rows; their own pivots
        # are untouched because v is already zero there
        for k, r in enumerate(self.rows):
            if r[pivot] != 0:
                self.rows[k] = _gcd_normalize(_combine(r, v, int(r[pivot]), int(v[pivot])))
        k = 0
        while k < len(self.pivots) and self.pivots[k] < pivot:
            k += 1
        self.pivots.insert(k, pivot)
        self.rows.insert(k, v)
        return True

    def contains(self, vec: np.ndarray) -> bool:
        v = self.residual(vec if vec.dtype == object else vec.astype(np.int64))
        return not np.any(v != 0)


def _offdiag_coords(arr: np.ndarray) -> np.ndarray:
    """Off-diagonal entries row by row; a bijection on zero row-sum matrices."""
    n = arr.shape[0]
    mask = ~np.eye(n, dtype=bool)
    return arr[mask]


class LieBasis:
    """Ordered, exactly independent zero row-sum matrices of one size."""

    __slots__ = ("size", "elements", "_echelon")

    def __init__(self, size: int, elements: Iterable[ZeroRowSumMatrix]):
        elems = tuple(elements)
        ech = IntRowEchelon(size * (size - 1))
        for m in elems:
            if m.size != size:
                raise SizeMismatch(f"element size {m.size} != basis size {size}")
            if not ech.insert(_offdiag_coords(m.array)):
                raise RankMismatch("basis elements are linearly dependent")
        object.__setattr__(self, "size", size)
        object.__setattr__(self, "elements", elems)
        object.__setattr__(self, "_echelon", ech)

    @property
    def dimension(self) -> int:
        return len(self.elements)

    def __setattr__(self, name, value):
        raise AttributeError("LieBasis is immutable")

    def __repr__(self) -> str:
        return f"LieBasis(size={self.size}, dimension={self.dimension})"


def span_contains(basis: LieBasis, m: ZeroRowSumMatrix) -> bool:
    """Exact membership of m in the span of the basis."""
    if m.size != basis.size:
        raise SizeMismatch(f"sizes differ: {m.size} vs {basis.size}")
    return basis._echelon.contains(_offdiag_coords(m.array))


def span_equal(b1: LieBasis, b2: LieBasis) -> bool:
    """True iff both bases span the same subspace (exact)."""
    if b1.size != b2.size:
        raise SizeMismatch(f"sizes differ: {b1.size} vs {b2.size}")
    if b1.dimension != b2.dimension:
        return False
    return all(span_contains(b1, m) for m in b2.elements)


def _expand_structural(ca: GeneratorCombination, cb: GeneratorCombination,
                       size: int) -> ZeroRowSumMatrix:
    """Bilinear expansion of [ca, cb] over the case table.

    A 2-cycle generator pair inside the expansion falls back to the dense
    bracket of that single pair, which keeps the result exact.
    """
    acc: dict[tuple[int, int], int] = {}
    for (i, j), c in ca.terms.items():
        for (p, q), d in cb.terms.items():
            w = c * d
            try:
                pair_terms = _structural_bracket_terms(i, j, p, q)
            except DegenerateBracket:
                pair_terms = {(j, i): 1, (i, j): -1}  # [A_ij, A_ji] = A_ji - A_ij
            for key, coeff in pair_terms.items():
                acc[key] = acc.get(key, 0) + w * coeff
    return GeneratorCombination(acc).dense(size)


def lie_closure(generators: Iterable[EdgeGenerator | ZeroRowSumMatrix],
                method: str = "dense") -> LieBasis:
    """Basis of the smallest bracket-closed subspace containing the generators.

    Worklist saturation: keep an exactly independent set, bracket every
    ordered pair once (first-in-first-out), and adjoin brackets that grow the
    rank. Terminates at dimension <= N(N-1). ``method`` selects how brackets
    are computed: "dense" multiplies matrices, "structural" expands over the
    symbolic case table; both give the same basis.
    """
    if method not in ("dense", "structural"):
        raise ValueError(f"unknown method {method!r}")
    gens = list(generators)
    if not gens:
        raise EmptyGeneratorSet("lie_closure needs at least one generator")
    size = gens[0].size
    mats: list[ZeroRowSumMatrix] = []
    for g in gens:
        if g.size != size:
            raise SizeMismatch(f"generator sizes differ: {g.size} vs {size}")
        mats.append(g.dense() if isinstance(g, EdgeGenerator) else g)

    ambient = size * (size - 1)
    ech = IntRowEchelon(ambient)
    basis: list[ZeroRowSumMatrix] = []
    pairs: deque[tuple[int, int]] = deque()
    for m in mats:
        if ech.insert(_offdiag_coords(m.array)):
            basis.append(m)
            k = len(basis) - 1
            pairs.extend((a, k) for a in range(k))
    if method == "structural":
        combos = [dense_to_combination(m) for m in basis]

    while pairs and ech.rank < ambient:
        a, b = pairs.popleft()
        if method == "dense":
            cand = ZeroRowSumMatrix(_bracket_arrays(basis[a].array, basis[b].array))
        else:
            cand = _expand_structural(combos[a], combos[b], size)
        if ech.insert(_offdiag_coords(cand.array)):
            basis.append(cand)
            if method == "structural":
                combos.append(dense_to_combination(cand))
            k = len(basis) - 1
            pairs.extend((x, k) for x in range(k))
    return LieBasis(size, basis)


# -- text format -----------------------------------------------------------

def format_basis_text(basis: LieBasis) -> str:
    """``dim <d>`` header, then one matrix per blank-line-separated record."""
    blocks = [f"dim {basis.dimension}"]
    for m in basis.elements:
        blocks.append("\n".join(" ".join(str(int(x)) for x in row) for row in m.array))
    return "\n\n".join(blocks) + "\n"


def parse_basis_text(text: str) -> LieBasis:
    lines = text.splitlines()
    k = 0
    while k < len(lines) and not lines[k].strip():
        k += 1
    if k == len(lines):
        raise InputFormatError("empty basis file")
    header = lines[k].split()
    if len(header) != 2 or header[0] != "dim":
        raise InputFormatError(f"expected 'dim <d>' header, got {lines[k]!r}")
    try:
        dim = int(header[1])
    except ValueError:
        raise InputFormatError(f"bad dimension {header[1]!r}") from None
    records: list[list[list[int]]] = []
    current: list[list[int]] = []
    for raw in lines[k + 1:]:
        line = raw.strip()
        if not line:
            if current:
                records.append(current)
                current = []
            continue
        try:
            current.append([int(tok) for tok in line.split()])
        except ValueError:
            raise InputFormatError(f"bad matrix row {raw!r}") from None
    if current:
        records.append(current)
    if len(records) != dim:
        raise InputFormatError(f"header says dim {dim} but found {len(records)} records")
    if not records:
        raise InputFormatError("a basis needs at least one matrix")
    size = len(records[0])
    mats = []
    for rec in records:
        if len(rec) != size or any(len(row) != size for row in rec):
            raise InputFormatError(f"matrix records must all be {size}x{size}")
        try:
            mats.append(ZeroRowSumMatrix(rec))
        except NotZeroRowSum as exc:
            raise InputFormatError(str(exc)) from None
    try:
        return LieBasis(size, mats)
    except RankMismatch as exc:
        raise InputFormatError(str(exc)) from None


def load_basis(path) -> LieBasis:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_basis_text(fh.read())
