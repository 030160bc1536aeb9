"""Directed graphs, coarse strong component decompositions, and closures.

Vertices are labeled 1..N throughout, matching the on-disk graph format.
Everything here is exact combinatorics; no floating point.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from .errors import InputFormatError, InvalidIndices, NotWeaklyConnected

__all__ = [
    "Digraph",
    "ScdReport",
    "StructuralKind",
    "StructuralVerdict",
    "is_weakly_connected",
    "coarse_scd",
    "transitive_closure",
    "verify_scd_closure_commutation",
    "structural_verdict",
    "parse_graph_text",
    "format_graph_text",
    "load_graph",
]


class Digraph:
    """Immutable directed graph without self-loops or duplicate edges."""

    def __init__(self, num_vertices: int, edges: Iterable[tuple[int, int]] = ()):
        n = int(num_vertices)
        if n < 1:
            raise InvalidIndices(f"num_vertices must be >= 1, got {num_vertices}")
        es = frozenset((int(i), int(j)) for i, j in edges)
        for i, j in es:
            if i == j:
                raise InvalidIndices(f"self-loop {i}->{j} is not allowed")
            if not (1 <= i <= n and 1 <= j <= n):
                raise InvalidIndices(f"edge {i}->{j} out of range 1..{n}")
        self.num_vertices = n
        self.edges = es

    # Digraph.complete / cycle / path cover the constructions used in tests
    # and examples without each caller re-deriving the edge sets.
    @classmethod
    def complete(cls, n: int) -> "Digraph":
        return cls(n, [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j])

    @classmethod
    def cycle(cls, n: int) -> "Digraph":
        return cls(n, [(i, i % n + 1) for i in range(1, n + 1)])

    @classmethod
    def path(cls, n: int) -> "Digraph":
        return cls(n, [(i, i + 1) for i in range(1, n)])

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Out-neighbors per vertex, ascending; index 0 holds vertex 1."""
        out: list[list[int]] = [[] for _ in range(self.num_vertices)]
        for i, j in self.edges:
            out[i - 1].append(j)
        return tuple(tuple(sorted(nbrs)) for nbrs in out)

    def induced(self, vertices: Iterable[int]) -> tuple[tuple[int, ...], dict[int, int]]:
        """Adjacency of the induced subgraph as bitmasks over the given vertices.

        Returns (masks, position) where masks[k] has bit l set iff there is an
        edge from the k-th to the l-th vertex of the (sorted) subset.
        """
        verts = sorted(set(vertices))
        pos = {v: k for k, v in enumerate(verts)}
        masks = [0] * len(verts)
        for i, j in self.edges:
            if i in pos and j in pos:
                masks[pos[i]] |= 1 << pos[j]
        return tuple(masks), pos

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Digraph):
            return NotImplemented
        return self.num_vertices == other.num_vertices and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.num_vertices, self.edges))

    def __repr__(self) -> str:
        return f"Digraph({self.num_vertices}, {sorted(self.edges)})"


def is_weakly_connected(g: Digraph) -> bool:
    """True iff the undirected shadow of g is connected (vacuously for N=1)."""
    n = g.num_vertices
    if n == 1:
        return True
    shadow: list[list[int]] = [[] for _ in range(n)]
    for i, j in g.edges:
        shadow[i - 1].append(j - 1)
        shadow[j - 1].append(i - 1)
    seen = [False] * n
    seen[0] = True
    stack = [0]
    count = 1
    while stack:
        v = stack.pop()
        for w in shadow[v]:
            if not seen[w]:
                seen[w] = True
                count += 1
                stack.append(w)
    return count == n


def _tarjan_components(g: Digraph) -> list[tuple[int, ...]]:
    """Maximal strongly connected vertex sets, each sorted ascending.

    Iterative Tarjan; deterministic regardless of discovery order because the
    caller re-sorts components by smallest member.
    """
    n = g.num_vertices
    adj = g.adjacency
    index = [0] * n          # 0 = unvisited, else 1-based discovery index
    lowlink = [0] * n
    onstack = [False] * n
    stack: list[int] = []
    comps: list[tuple[int, ...]] = []
    counter = 1
    for root in range(n):
        if index[root]:
            continue
        # each frame: (vertex, iterator position into its neighbor tuple)
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = lowlink[v] = counter
                counter += 1
                stack.append(v)
                onstack[v] = True
            nbrs = adj[v]
            advanced = False
            while pi < len(nbrs):
                w = nbrs[pi] - 1
                pi += 1
                if not index[w]:
                    work[-1] = (v, pi)
                    work.append((w, 0))
                    advanced = True
                    break
                if onstack[w]:
                    if index[w] < lowlink[v]:
                        lowlink[v] = index[w]
            if advanced:
                continue
            work.pop()
            if lowlink[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    onstack[w] = False
                    comp.append(w + 1)
                    if w == v:
                        break
                comp.sort()
                comps.append(tuple(comp))
            if work:
                u = work[-1][0]
                if lowlink[v] < lowlink[u]:
                    lowlink[u] = lowlink[v]
    comps.sort(key=lambda c: c[0])
    return comps


class ScdReport:
    """Coarse strong component decomposition of a weakly connected digraph.

    Components are labeled 1..q in order of their smallest vertex. ``skeleton``
    is the acyclic digraph of inter-component flows; ``maximal_set`` holds the
    skeleton vertices with no outgoing edges.
    """

    def __init__(self, graph: Digraph, components: tuple[tuple[int, ...], ...]):
        self.graph = graph
        self.components = components

    @cached_property
    def component_sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.components)

    @cached_property
    def _component_of(self) -> dict[int, int]:
        owner: dict[int, int] = {}
        for label, comp in enumerate(self.components, start=1):
            for v in comp:
                owner[v] = label
        return owner

    def component_of(self, vertex: int) -> int:
        """1-based label of the component containing ``vertex``."""
        return self._component_of[vertex]

    @cached_property
    def skeleton(self) -> Digraph:
        owner = self._component_of
        edges = set()
        for i, j in self.graph.edges:
            ci, cj = owner[i], owner[j]
            if ci != cj:
                edges.add((ci, cj))
        return Digraph(len(self.components), edges)

    @cached_property
    def maximal_set(self) -> frozenset[int]:
        sources = {i for i, _ in self.skeleton.edges}
        return frozenset(w for w in range(1, len(self.components) + 1) if w not in sources)

    def __repr__(self) -> str:
        return f"ScdReport(components={self.components})"


def coarse_scd(g: Digraph) -> ScdReport:
    """Unique minimum-cardinality partition into induced strongly connected parts.

    The maximal strongly connected components realize it: any partition whose
    parts induce strongly connected subgraphs refines the maximal components,
    so no partition can be coarser, and equality forces part = component.

    Raises NotWeaklyConnected when the undirected shadow is disconnected.
    """
    if not is_weakly_connected(g):
        raise NotWeaklyConnected(f"graph on {g.num_vertices} vertices is not weakly connected")
    return ScdReport(g, tuple(_tarjan_components(g)))


def transitive_closure(g: Digraph) -> Digraph:
    """Digraph with an edge i->j wherever g has a nonempty path, i != j.

    Computed through the component condensation: vertices of one strongly
    connected component of size >= 2 see each other, and a component sees
    every vertex of every component reachable from it in the condensation.
    """
    comps = _tarjan_components(g)
    q = len(comps)
    owner: dict[int, int] = {}
    for k, comp in enumerate(comps):
        for v in comp:
            owner[v] = k
    succ: list[set[int]] = [set() for _ in range(q)]
    for i, j in g.edges:
        ci, cj = owner[i], owner[j]
        if ci != cj:
            succ[ci].add(cj)
    # components come out ordered by smallest vertex, which is not topological;
    # propagate reachability until stable (q is small at desk scale)
    reach: list[int] = [0] * q          # bitmask over component indices
    for k in range(q):
        reach[k] = 1 << k
    changed = True
    while changed:
        changed = False
        for k in range(q):
            r = reach[k]
            for s in succ[k]:
                r |= reach[s]
            if r != reach[k]:
                reach[k] = r
                changed = True
    edges = []
    for k, comp in enumerate(comps):
        targets: list[int] = []
        mask = reach[k]
        for s in range(q):
            if mask >> s & 1:
                if s == k and len(comp) == 1:
                    continue  # no nonempty cycle through an isolated vertex
                targets.extend(comps[s])
        for i in comp:
            for j in targets:
                if i != j:
                    edges.append((i, j))
    return Digraph(g.num_vertices, edges)


def verify_scd_closure_commutation(g: Digraph) -> bool:
    """Check that decomposition and transitive closure commute for g.

    True iff the closure has the same component partition, every closed
    component is complete, and the closure's skeleton equals the transitive
    closure of g's skeleton.
    """
    scd = coarse_scd(g)
    closed = transitive_closure(g)
    scd_closed = coarse_scd(closed)
    if scd_closed.components != scd.components:
        return False
    for comp in scd_closed.components:
        for i in comp:
            for j in comp:
                if i != j and (i, j) not in closed.edges:
                    return False
    return scd_closed.skeleton == transitive_closure(scd.skeleton)


class StructuralKind(enum.Enum):
    GENERICALLY_CONTROLLABLE = "generically-controllable"
    CONTROLLABLE_SET_EMPTY = "controllable-set-empty"
    CONTROLLABLE_SET_DISCONNECTED = "controllable-set-disconnected"


@dataclass(frozen=True)
class StructuralVerdict:
    """Outcome of the size test on maximal components for ambient dimension n.

    ``offending_components`` lists the maximal components whose vertex count
    is at most n+1 (ascending); empty when generically controllable.
    """

    kind: StructuralKind
    offending_components: tuple[int, ...]


def structural_verdict(g: Digraph, n: int) -> StructuralVerdict:
    """Classify g for agents in R^n by the sizes of its maximal components.

    Generically controllable when every maximal component has more than n+1
    vertices; the controllable set is empty when some maximal component has
    at most n vertices, and disconnected when the smallest maximal component
    has exactly n+1.
    """
    if n < 1:
        raise InvalidIndices(f"ambient dimension must be >= 1, got {n}")
    scd = coarse_scd(g)
    sizes = scd.component_sizes
    offending = tuple(sorted(w for w in scd.maximal_set if sizes[w - 1] <= n + 1))
    if not offending:
        kind = StructuralKind.GENERICALLY_CONTROLLABLE
    elif any(sizes[w - 1] <= n for w in offending):
        kind = StructuralKind.CONTROLLABLE_SET_EMPTY
    else:
        kind = StructuralKind.CONTROLLABLE_SET_DISCONNECTED
    return StructuralVerdict(kind, offending)


# -- text format -----------------------------------------------------------

def parse_graph_text(text: str) -> Digraph:
    """Parse the graph format: header ``N <count>``, one ``i j`` line per edge.

    Lines starting with ``#`` and blank lines are ignored.
    """
    num_vertices = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if num_vertices is None:
            if len(parts) != 2 or parts[0] != "N":
                raise InputFormatError(f"line {lineno}: expected header 'N <count>', got {raw!r}")
            try:
                num_vertices = int(parts[1])
            except ValueError:
                raise InputFormatError(f"line {lineno}: bad vertex count {parts[1]!r}") from None
            continue
        if len(parts) != 2:
            raise InputFormatError(f"line {lineno}: expected '<i> <j>', got {raw!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise InputFormatError(f"line {lineno}: bad edge {raw!r}") from None
        edges.append((i, j))
    if num_vertices is None:
        raise InputFormatError("missing 'N <count>' header")
    try:
        return Digraph(num_vertices, edges)
    except InvalidIndices as exc:
        raise InputFormatError(str(exc)) from None


def format_graph_text(g: Digraph) -> str:
    lines = [f"N {g.num_vertices}"]
    lines.extend(f"{i} {j}" for i, j in sorted(g.edges))
    return "\n".join(lines) + "\n"


def load_graph(path) -> Digraph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph_text(fh.read())
