"""Shared generators and independent oracles for the test suite.

The oracles here deliberately avoid the library's algorithms: reachability is
a plain DFS, decompositions come from enumerating set partitions, and spans
are compared through numpy rank computations on stacked matrices.
"""

from __future__ import annotations

import random
from itertools import combinations

import numpy as np
from hypothesis import strategies as st

from formctl.digraph import Digraph


def all_pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]


def random_connected_digraph(rng: random.Random, n: int, extra: float = 0.3) -> Digraph:
    """Random weakly connected digraph: oriented random tree plus extra edges."""
    order = list(range(1, n + 1))
    rng.shuffle(order)
    edges = set()
    for k in range(1, n):
        a, b = order[rng.randrange(k)], order[k]
        edges.add((a, b) if rng.random() < 0.5 else (b, a))
    for e in all_pairs(n):
        if rng.random() < extra:
            edges.add(e)
    return Digraph(n, edges)


@st.composite
def digraphs(draw, min_n: int = 2, max_n: int = 6, connected: bool = True):
    n = draw(st.integers(min_n, max_n))
    pairs = all_pairs(n)
    edges = set(draw(st.sets(st.sampled_from(pairs)))) if pairs else set()
    if connected and n > 1:
        order = draw(st.permutations(range(1, n + 1)))
        for k in range(1, n):
            parent = order[draw(st.integers(0, k - 1))]
            child = order[k]
            if draw(st.booleans()):
                edges.add((parent, child))
            else:
                edges.add((child, parent))
    return Digraph(n, edges)


# -- independent digraph oracles ------------------------------------------

def reachable_within(g: Digraph, part: frozenset[int], start: int) -> set[int]:
    out: dict[int, list[int]] = {v: [] for v in part}
    for i, j in g.edges:
        if i in part and j in part:
            out[i].append(j)
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in out[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def part_strongly_connected(g: Digraph, part: frozenset[int]) -> bool:
    """Induced subgraph on ``part`` is strongly connected (size 1 counts)."""
    if len(part) == 1:
        return True
    start = next(iter(part))
    if reachable_within(g, part, start) != part:
        return False
    rev = Digraph(g.num_vertices, [(j, i) for i, j in g.edges])
    return reachable_within(rev, part, start) == part


def set_partitions(items: list[int]):
    """All partitions of ``items`` as lists of frozensets."""
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for sub in set_partitions(rest):
        for k in range(len(sub)):
            yield sub[:k] + [sub[k] | {head}] + sub[k + 1:]
        yield [frozenset({head})] + sub


def minimum_scd_partitions(g: Digraph) -> list[frozenset[frozenset[int]]]:
    """Every minimum-cardinality partition into strongly connected parts."""
    best: list[frozenset[frozenset[int]]] = []
    best_size = g.num_vertices + 1
    for partition in set_partitions(list(range(1, g.num_vertices + 1))):
        if len(partition) > best_size:
            continue
        if all(part_strongly_connected(g, part) for part in partition):
            if len(partition) < best_size:
                best_size = len(partition)
                best = [frozenset(partition)]
            else:
                best.append(frozenset(partition))
    return best


def edge_reachability(g: Digraph) -> set[tuple[int, int]]:
    """Pairs (i, j), i != j, joined by a nonempty path; plain per-vertex DFS."""
    pairs = set()
    everything = frozenset(range(1, g.num_vertices + 1))
    out = {v: [] for v in everything}
    for i, j in g.edges:
        out[i].append(j)
    for s in everything:
        seen: set[int] = set()
        stack = list(out[s])
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(out[v])
        for t in seen:
            if t != s:
                pairs.add((s, t))
    return pairs


# -- matrices and spans ----------------------------------------------------

def random_zero_row_sum(rng: random.Random, n: int, lo: int = -3, hi: int = 3) -> np.ndarray:
    m = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            if i != j:
                m[i, j] = rng.randint(lo, hi)
        m[i, i] = -m[i].sum()
    return m


def span_rank(mats: list[np.ndarray]) -> int:
    if not mats:
        return 0
    stacked = np.stack([m.reshape(-1) for m in mats]).astype(float)
    return int(np.linalg.matrix_rank(stacked, tol=1e-9))


def same_span(a: list[np.ndarray], b: list[np.ndarray]) -> bool:
    ra, rb = span_rank(a), span_rank(b)
    return ra == rb == span_rank(a + b)


def sink_component_graph(rng: random.Random, n_comps: int, comp_sizes: list[int]) -> Digraph:
    """Weakly connected digraph whose maximal components have the given sizes.

    The first ``len(comp_sizes)`` components are cycles of those sizes; the
    rest are single vertices feeding into them. With several sinks at least
    one feeder is forced so the graph stays weakly connected, bumping
    ``n_comps`` if needed.
    """
    feeders_needed = 1 if len(comp_sizes) > 1 else 0
    n_comps = max(n_comps, len(comp_sizes) + feeders_needed)
    labels: list[list[int]] = []
    next_v = 1
    for size in comp_sizes:
        labels.append(list(range(next_v, next_v + size)))
        next_v += size
    for _ in range(n_comps - len(comp_sizes)):
        labels.append([next_v])
        next_v += 1
    edges: set[tuple[int, int]] = set()
    for comp in labels:
        if len(comp) > 1:
            for a, b in zip(comp, comp[1:] + comp[:1]):
                edges.add((a, b))
            for a, b in combinations(comp, 2):
                if rng.random() < 0.3:
                    edges.add((a, b))
    # the first feeder touches every sink so two sinks never end up in
    # separate weak components; later feeders pick targets at random
    for k in range(len(comp_sizes), len(labels)):
        if k == len(comp_sizes):
            for target in range(len(comp_sizes)):
                edges.add((labels[k][0], labels[target][0]))
        else:
            edges.add((labels[k][0], labels[rng.randrange(len(comp_sizes))][0]))
        for other in range(len(comp_sizes), k):
            if rng.random() < 0.3:
                edges.add((labels[k][0], labels[other][0]))
    return Digraph(next_v - 1, edges)


def rank_k_near(center, k: int, chosen: tuple[int, ...],
                rng: np.random.Generator, magnitude: float = 0.05):
    """Perturb center within the rank-k stratum: move the chosen agents
    freely and keep the rest at (perturbed) affine combinations of them."""
    from formctl.configspace import Configuration

    pts = center.agents.copy()
    weights = {}
    base = pts[chosen[0] - 1]
    anchors = pts[[i - 1 for i in chosen]]
    diffs = (anchors[1:] - anchors[0]).T
    for i in range(1, center.N + 1):
        if i not in chosen:
            w, *_ = np.linalg.lstsq(diffs, pts[i - 1] - base, rcond=None)
            weights[i] = w + magnitude * rng.standard_normal(k)
    pts[[i - 1 for i in chosen]] += magnitude * rng.standard_normal((k + 1, center.n))
    new_anchors = pts[[i - 1 for i in chosen]]
    new_diffs = (new_anchors[1:] - new_anchors[0]).T
    for i, w in weights.items():
        pts[i - 1] = new_anchors[0] + new_diffs @ w
    return Configuration.from_agents(pts)
