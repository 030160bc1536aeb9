"""Lie algebra rank condition at a configuration.

The control fields at p are the lifted generators D(A) p for A ranging over
the closure algebra, where D(A) repeats A once per coordinate. By the
closure characterization, their span is determined by the transitive closure
of the interaction graph, and because the field of edge i->j is supported on
agent i's coordinate slots alone, the span dimension decomposes into a sum
of small per-agent ranks. That decomposition is the production path; the
stacked-matrix rank is kept as a debug cross-check.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .configspace import (
    RANK_TOL,
    Configuration,
    find_nondegenerate_simplex,
    extend_simplex_with_point,
    in_controllable_set,
    numeric_rank,
)
from .digraph import (
    Digraph,
    StructuralKind,
    coarse_scd,
    structural_verdict,
    transitive_closure,
)
from .errors import (
    InputFormatError,
    NotInControllableSet,
    SizeMismatch,
    StructuralFailure,
)
from .liealg import EdgeGenerator, ZeroRowSumMatrix

__all__ = [
    "LiftedField",
    "LarcReport",
    "WitnessVector",
    "WitnessBasis",
    "lift_block_diagonal",
    "lie_algebra_at",
    "larc_passes",
    "construct_witness_basis",
    "format_larc_report_json",
    "parse_larc_report_json",
    "format_witness_csv",
]


def lift_block_diagonal(a: ZeroRowSumMatrix, n: int) -> np.ndarray:
    """Matrix of D(a) = Diag(a, ..., a) with n blocks, acting coordinate-major."""
    return np.kron(np.eye(n, dtype=np.int64), a.array)


def _field_at(i: int, j: int, p: Configuration) -> np.ndarray:
    """D(A_ij) p: the difference x_j - x_i in agent i's slots, coordinate-major."""
    out = np.zeros(p.n * p.N)
    diff = p.agent(j) - p.agent(i)
    out[np.arange(p.n) * p.N + (i - 1)] = diff
    return out


@dataclass(frozen=True)
class LiftedField:
    """Control vector field of one closure edge."""

    generator: EdgeGenerator

    def evaluate(self, p: Configuration) -> np.ndarray:
        if p.N != self.generator.size:
            raise SizeMismatch(
                f"field is over {self.generator.size} agents, configuration has {p.N}")
        return _field_at(self.generator.i, self.generator.j, p)


@dataclass(frozen=True)
class LarcReport:
    """Span dimension of the control fields at one configuration."""

    dimension: int
    required: int
    per_agent_ranks: tuple[int, ...]
    closure_edge_count: int

    @property
    def passes(self) -> bool:
        return self.dimension == self.required


def lie_algebra_at(p: Configuration, g: Digraph, *, debug_slow_path: bool = False,
                   tol: float = RANK_TOL) -> LarcReport:
    """Dimension of span{D(A) p : A in the closure algebra of g}.

    Per agent i, the fields of edges i->j in the transitive closure occupy
    agent i's coordinate slots only, so the total dimension is the sum over
    agents of rank{x_j - x_i}. With debug_slow_path the stacked field matrix
    is ranked directly and must agree.
    """
    if p.N != g.num_vertices:
        raise SizeMismatch(
            f"graph has {g.num_vertices} vertices, configuration has {p.N} agents")
    closed = transitive_closure(g)
    pts = p.agents
    ranks = []
    for i in range(1, p.N + 1):
        nbrs = closed.adjacency[i - 1]
        if not nbrs:
            ranks.append(0)
            continue
        diffs = pts[[j - 1 for j in nbrs]] - pts[i - 1]
        ranks.append(numeric_rank(diffs.T, tol))
    dim = sum(ranks)
    if debug_slow_path:
        cols = [_field_at(i, j, p) for i, j in sorted(closed.edges)]
        stacked = np.column_stack(cols) if cols else np.zeros((p.n * p.N, 0))
        slow = numeric_rank(stacked, tol)
        if slow != dim:
            raise StructuralFailure(
                f"per-agent rank sum {dim} disagrees with stacked rank {slow}")
    return LarcReport(dim, p.n * p.N, tuple(ranks), len(closed.edges))


def larc_passes(p: Configuration, g: Digraph, tol: float = RANK_TOL) -> bool:
    return lie_algebra_at(p, g, tol=tol).passes


@dataclass(frozen=True)
class WitnessVector:
    """One witness field: its value at p and where it came from."""

    kind: str               # "simplex" or "attachment"
    component: int          # maximal component label
    edge: tuple[int, int]   # generating edge i -> j
    values: tuple[float, ...]


class WitnessBasis:
    """Explicit nN independent control fields certifying the rank condition."""

    __slots__ = ("n", "N", "vectors")

    def __init__(self, n: int, N: int, vectors: tuple[WitnessVector, ...]):
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "vectors", vectors)

    @property
    def matrix(self) -> np.ndarray:
        """(nN, count) matrix with one witness field per column."""
        return np.column_stack([np.asarray(v.values) for v in self.vectors]) \
            if self.vectors else np.zeros((self.n * self.N, 0))

    def __setattr__(self, name, value):
        raise AttributeError("WitnessBasis is immutable")

    def __repr__(self) -> str:
        return f"WitnessBasis(n={self.n}, N={self.N}, count={len(self.vectors)})"


def construct_witness_basis(p: Configuration, g: Digraph,
                            tol: float = RANK_TOL) -> WitnessBasis:
    """The explicit nN-vector certificate for a structurally sound pair.

    Per maximal component: a non-degenerate simplex of n+1 of its agents
    contributes the n(n+1) fields of all ordered simplex pairs. Every other
    agent attaches to the smallest-label maximal component it reaches: the
    simplex there is extended with the agent's position and the n fields
    toward the kept simplex agents are emitted. All generating edges lie in
    the transitive closure, so the result spans a subspace of the control
    span; its rank is checked to be exactly nN.
    """
    n = p.n
    scd = coarse_scd(g)
    verdict = structural_verdict(g, n)
    if verdict.kind is not StructuralKind.GENERICALLY_CONTROLLABLE:
        raise StructuralFailure(
            f"graph verdict is {verdict.kind.value}; offending maximal components "
            f"{list(verdict.offending_components)}")
    membership = in_controllable_set(p, scd, tol)
    if not membership:
        failing = [w for w, r in membership.component_ranks if r != n]
        raise NotInControllableSet(
            f"maximal components {failing} are degenerate at this configuration")

    skeleton_closed = transitive_closure(scd.skeleton)
    maximal = sorted(scd.maximal_set)
    # smallest-label maximal component reachable from each skeleton vertex
    reach_choice: dict[int, int] = {}
    for c in range(1, len(scd.components) + 1):
        if c in scd.maximal_set:
            reach_choice[c] = c
            continue
        reachable = [w for w in maximal if (c, w) in skeleton_closed.edges]
        reach_choice[c] = reachable[0]

    simplices: dict[int, tuple[int, ...]] = {}
    vectors: list[WitnessVector] = []
    for w in maximal:
        comp = scd.components[w - 1]
        local = find_nondegenerate_simplex(p.subconfiguration(comp), tol)
        simplices[w] = tuple(comp[l - 1] for l in local)
        for a in simplices[w]:
            for b in simplices[w]:
                if a != b:
                    vectors.append(WitnessVector(
                        "simplex", w, (a, b), tuple(_field_at(a, b, p))))

    in_simplex = {a for idx in simplices.values() for a in idx}
    for j in range(1, p.N + 1):
        if j in in_simplex:
            continue
        w = reach_choice[scd.component_of(j)]
        simplex_conf = p.subconfiguration(simplices[w])
        kept_local = extend_simplex_with_point(simplex_conf, p.agent(j), tol)
        for l in kept_local:
            k = simplices[w][l - 1]
            vectors.append(WitnessVector(
                "attachment", w, (j, k), tuple(_field_at(j, k, p))))

    basis = WitnessBasis(n, p.N, tuple(vectors))
    if len(vectors) != n * p.N:
        raise StructuralFailure(
            f"witness construction produced {len(vectors)} vectors, expected {n * p.N}")
    if numeric_rank(basis.matrix, tol) != n * p.N:
        raise StructuralFailure("witness vectors are numerically dependent")
    return basis


# -- serialization ---------------------------------------------------------

def format_larc_report_json(report: LarcReport) -> str:
    return json.dumps({
        "dim": report.dimension,
        "required": report.required,
        "passes": report.passes,
        "per_agent": list(report.per_agent_ranks),
        "closure_edges": report.closure_edge_count,
    }, indent=2) + "\n"


def parse_larc_report_json(text: str) -> LarcReport:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"bad JSON: {exc}") from None
    try:
        report = LarcReport(int(obj["dim"]), int(obj["required"]),
                            tuple(int(r) for r in obj["per_agent"]),
                            int(obj["closure_edges"]))
    except (KeyError, TypeError, ValueError):
        raise InputFormatError("expected keys dim, required, per_agent, "
                               "closure_edges") from None
    if bool(obj.get("passes")) != report.passes:
        raise InputFormatError("stored passes flag contradicts dim/required")
    return report


def format_witness_csv(basis: WitnessBasis) -> str:
    """One vector per row, its provenance label in the trailing column."""
    lines = []
    for v in basis.vectors:
        label = f"{v.kind}:{v.component}:{v.edge[0]}->{v.edge[1]}"
        lines.append(",".join(f"{x:.17g}" for x in v.values) + "," + label)
    return "\n".join(lines) + "\n"
