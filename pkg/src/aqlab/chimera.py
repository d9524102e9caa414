"""Chimera hardware graphs, randomized greedy minor embedding, instance
embedding with chain couplings, and majority-vote unembedding.

Cell layout: each unit cell is a complete bipartite 4+4 block. Left-side
qubits connect to the same position in vertically adjacent cells, right-side
qubits horizontally -- the usual hardware convention, adopted here because
only the intra-cell wiring is forced by the cell diagram.
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np

from .problems import IsingInstance, energy, spin_config

__all__ = [
    "ChimeraGraph",
    "MinorEmbedding",
    "EmbeddedInstance",
    "EmbeddingError",
    "build_chimera",
    "chimera_index",
    "chimera_coords",
    "find_embedding",
    "validate_embedding",
    "embedding_stats",
    "embed_instance",
    "unembed",
    "save_embedding",
    "load_embedding",
    "save_graph",
    "load_graph",
]

CELL_SIZE = 8
SHORE = 4


class EmbeddingError(RuntimeError):
    """Chain-growth search exhausted its restarts; carries diagnostics."""

    def __init__(self, message, best_progress=None):
        super().__init__(message)
        self.best_progress = best_progress


def chimera_index(row: int, col: int, side: int, k: int, cols: int) -> int:
    """(row, col, side, k) -> linear vertex id; side 0 = left shore."""
    return ((row * cols + col) * 2 + side) * SHORE + k


def chimera_coords(vertex: int, cols: int) -> tuple[int, int, int, int]:
    k = vertex % SHORE
    side = (vertex // SHORE) % 2
    cell = vertex // CELL_SIZE
    return cell // cols, cell % cols, side, k


@dataclass(frozen=True)
class ChimeraGraph:
    """Grid of complete-bipartite 4+4 cells with the standard inter-cell
    wiring (left shore vertical, right shore horizontal)."""

    rows: int
    cols: int
    graph: nx.Graph

    @property
    def n_vertices(self) -> int:
        return CELL_SIZE * self.rows * self.cols

    def degree(self, vertex: int) -> int:
        return self.graph.degree[vertex]

    def edges(self):
        return sorted(tuple(sorted(e)) for e in self.graph.edges)


def build_chimera(rows: int, cols: int) -> ChimeraGraph:
    """Chimera hardware graph with 8 * rows * cols vertices."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    g = nx.Graph()
    g.add_nodes_from(range(CELL_SIZE * rows * cols))
    for r in range(rows):
        for c in range(cols):
            for k_left in range(SHORE):
                left = chimera_index(r, c, 0, k_left, cols)
                for k_right in range(SHORE):
                    g.add_edge(left, chimera_index(r, c, 1, k_right, cols))
            if r + 1 < rows:
                for k in range(SHORE):
                    g.add_edge(
                        chimera_index(r, c, 0, k, cols),
                        chimera_index(r + 1, c, 0, k, cols),
                    )
            if c + 1 < cols:
                for k in range(SHORE):
                    g.add_edge(
                        chimera_index(r, c, 1, k, cols),
                        chimera_index(r, c + 1, 1, k, cols),
                    )
    return ChimeraGraph(rows=rows, cols=cols, graph=g)


@dataclass(frozen=True)
class MinorEmbedding:
    """Map logical vertex -> connected, vertex-disjoint chain of physical
    qubits covering every logical edge."""

    chains: dict

    def __post_init__(self):
        canon = {v: tuple(sorted(int(q) for q in chain)) for v, chain in self.chains.items()}
        for v, chain in canon.items():
            if not chain:
                raise ValueError(f"empty chain for logical vertex {v}")
        object.__setattr__(self, "chains", canon)

    @property
    def physical_vertices(self) -> tuple:
        return tuple(sorted(q for chain in self.chains.values() for q in chain))

    def max_chain_length(self) -> int:
        return max(len(c) for c in self.chains.values())


def validate_embedding(emb: MinorEmbedding, logical_graph: nx.Graph, hw: ChimeraGraph) -> list[str]:
    """Independent validator; returns a list of violations (empty = valid)."""
    problems = []
    seen = {}
    for v, chain in emb.chains.items():
        for q in chain:
            if q in seen:
                problems.append(f"qubit {q} shared by chains {seen[q]} and {v}")
            seen[q] = v
            if q not in hw.graph:
                problems.append(f"qubit {q} not in the hardware graph")
    for v in logical_graph.nodes:
        if v not in emb.chains:
            problems.append(f"logical vertex {v} has no chain")
    for v, chain in emb.chains.items():
        sub = hw.graph.subgraph(chain)
        if len(chain) > 1 and not nx.is_connected(sub):
            problems.append(f"chain for {v} is not connected")
    for u, v in logical_graph.edges:
        if u not in emb.chains or v not in emb.chains:
            continue
        if not _inter_chain_edges(emb.chains[u], emb.chains[v], hw):
            problems.append(f"logical edge ({u},{v}) not covered by any physical edge")
    return problems


def _inter_chain_edges(chain_a, chain_b, hw: ChimeraGraph):
    edges = []
    set_b = set(chain_b)
    for qa in chain_a:
        for qb in hw.graph[qa]:
            if qb in set_b:
                edges.append((qa, qb))
    return sorted(edges)


def embedding_stats(emb: MinorEmbedding, logical_graph: nx.Graph) -> dict:
    """Used-vertex count against the |G|^2 size guidance."""
    used = len(emb.physical_vertices)
    n = logical_graph.number_of_nodes()
    return {
        "logical_vertices": n,
        "physical_used": used,
        "square_guidance": n * n,
        "max_chain_length": emb.max_chain_length(),
    }


def _weighted_dists(chain, adjacency, weight):
    """Multi-source Dijkstra out of a chain with per-vertex entry costs.

    ``dist[q]`` is the cheapest total vertex weight of a path from the
    chain to q (q included, chain vertices excluded); ``parent`` backtracks
    toward the chain (None = directly adjacent).
    """
    import heapq

    chain_set = set(chain)
    dist: dict = {}
    parent: dict = {}
    heap = []
    for q in chain:
        for nb in adjacency[q]:
            if nb in chain_set:
                continue
            d = weight(nb)
            if nb not in dist or d < dist[nb]:
                dist[nb] = d
                parent[nb] = None
                heapq.heappush(heap, (d, nb))
    while heap:
        d, q = heapq.heappop(heap)
        if d > dist.get(q, np.inf):
            continue
        for nb in adjacency[q]:
            if nb in chain_set:
                continue
            nd = d + weight(nb)
            if nb not in dist or nd < dist[nb]:
                dist[nb] = nd
                parent[nb] = q
                heapq.heappush(heap, (nd, nb))
    return dist, parent


def _grow_chain(vertex, neighbor_chains, adjacency, rng, weight):
    """Root-plus-cheapest-paths chain reaching every embedded neighbor chain
    under the supplied per-qubit entry cost; None if some chain is cut off."""
    nodes = list(adjacency)
    if not neighbor_chains:
        candidates = sorted(nodes, key=lambda q: (weight(q), rng.random()))
        return {int(candidates[0])}
    dists, parents = [], []
    for chain in neighbor_chains:
        d, p = _weighted_dists(chain, adjacency, weight)
        dists.append(d)
        parents.append(p)
    blocked = set().union(*(set(c) for c in neighbor_chains))
    best_root, best_score = None, None
    candidates = [q for q in nodes if q not in blocked]
    rng.shuffle(candidates)
    for q in candidates:
        if not all(q in d for d in dists):
            continue
        # the root's own weight is counted once per source; rebate the extras
        score = sum(d[q] for d in dists) - (len(dists) - 1) * weight(q)
        if best_score is None or score < best_score:
            best_root, best_score = q, score
    if best_root is None:
        return None
    chain = {best_root}
    for p in parents:
        q = best_root
        while p[q] is not None:
            q = p[q]
            chain.add(q)
    return chain


def find_embedding(
    logical_graph: nx.Graph,
    hw: ChimeraGraph,
    seed: int = 0,
    max_restarts: int = 16,
    max_rounds: int = 32,
    penalty: float = 8.0,
) -> MinorEmbedding:
    """Randomized greedy chain growth with negotiated-congestion repair.

    Chains are first grown one logical vertex at a time (descending degree,
    randomly perturbed per restart) with overlaps between chains *allowed*
    but priced at ``penalty`` per squatter. Re-routing rounds then rip up
    and re-grow every chain under rising pressure on contested qubits until
    the chains are vertex-disjoint. Restarts reshuffle everything; running
    out raises :class:`EmbeddingError` carrying the best progress seen.
    """
    if logical_graph.number_of_nodes() == 0:
        raise ValueError("logical graph is empty")
    for u, v in logical_graph.edges:
        if u == v:
            raise ValueError("logical graph must be simple (self-loop found)")
    if logical_graph.number_of_nodes() > hw.n_vertices:
        raise EmbeddingError("logical graph larger than the hardware graph")
    seeds = np.random.SeedSequence(seed).spawn(max_restarts)
    vertices = list(logical_graph.nodes)
    adjacency = {q: sorted(hw.graph[q]) for q in sorted(hw.graph.nodes)}
    best_contested = None
    for attempt in range(max_restarts):
        rng = np.random.default_rng(seeds[attempt])
        order = sorted(vertices, key=lambda v: (-logical_graph.degree[v], rng.random()))
        occupancy = {q: set() for q in adjacency}
        pressure = {q: 0.0 for q in adjacency}
        chains: dict = {}

        def weight(q, current=None):
            squatters = len(occupancy[q] - {current})
            return (1.0 + pressure[q]) * penalty**squatters

        def place(v):
            neighbor_chains = [chains[u] for u in logical_graph[v] if u in chains]
            chain = _grow_chain(v, neighbor_chains, adjacency, rng, lambda q: weight(q, v))
            if chain is None:
                return False
            chains[v] = chain
            for q in chain:
                occupancy[q].add(v)
            return True

        ok = all(place(v) for v in order)
        if ok:
            for round_no in range(max_rounds):
                contested = [q for q in sorted(occupancy) if len(occupancy[q]) > 1]
                if not contested:
                    break
                for q in contested:
                    pressure[q] += 1.0
                # usually only the chains involved in a conflict move; a full
                # sweep every few rounds shakes off local minima
                if round_no % 4 == 3:
                    targets = list(order)
                else:
                    involved = set()
                    for q in contested:
                        involved |= occupancy[q]
                    targets = [v for v in order if v in involved]
                for vi in rng.permutation(len(targets)):
                    v = targets[int(vi)]
                    for q in chains[v]:
                        occupancy[q].discard(v)
                    if not place(v):
                        ok = False
                        break
                if not ok:
                    break
            contested = [q for q in occupancy if len(occupancy[q]) > 1]
            if ok and not contested:
                emb = MinorEmbedding(chains={v: tuple(c) for v, c in chains.items()})
                if not validate_embedding(emb, logical_graph, hw):
                    return emb
            best_contested = (
                len(contested) if best_contested is None else min(best_contested, len(contested))
            )
    raise EmbeddingError(
        f"no embedding found in {max_restarts} restarts "
        f"(best attempt left {best_contested} contested qubits)",
        best_progress=best_contested,
    )


@dataclass(frozen=True)
class EmbeddedInstance:
    """Physical instance over compact indices plus the bookkeeping needed to
    read solutions back out."""

    instance: IsingInstance
    vertex_order: tuple
    embedding: MinorEmbedding
    logical: IsingInstance
    chain_strength: float
    intra_chain_edges: int


def embed_instance(
    instance: IsingInstance,
    emb: MinorEmbedding,
    hw: ChimeraGraph,
    chain_strength: float | None = None,
    spread_couplings: bool = False,
) -> EmbeddedInstance:
    """Spread a logical instance over an embedding.

    Logical J lands on the first inter-chain physical edge (or is split
    evenly over all of them with ``spread_couplings``); logical h is divided
    equally along the chain; every intra-chain hardware edge gets a
    ferromagnetic coupling of ``chain_strength`` (default 2 * max |J|).
    """
    for i in range(instance.n):
        if i not in emb.chains:
            raise ValueError(f"embedding lacks a chain for logical vertex {i}")
    logical_edges = set(instance.edges())
    if chain_strength is None:
        chain_strength = 2.0 * instance.max_abs_coupling()
    physical = emb.physical_vertices
    index_of = {q: i for i, q in enumerate(physical)}
    couplings: dict = {}
    h = np.zeros(len(physical))
    intra_edges = 0

    def add_coupling(qa, qb, val):
        key = tuple(sorted((index_of[qa], index_of[qb])))
        couplings[key] = couplings.get(key, 0.0) + val

    for (i, j) in logical_edges:
        bridge = _inter_chain_edges(emb.chains[i], emb.chains[j], hw)
        if not bridge:
            raise ValueError(f"embedding does not cover logical edge ({i},{j})")
        val = instance.couplings[(i, j)]
        if spread_couplings:
            for qa, qb in bridge:
                add_coupling(qa, qb, val / len(bridge))
        else:
            add_coupling(*bridge[0], val)
    for i, chain in emb.chains.items():
        share = instance.h[i] / len(chain)
        for q in chain:
            h[index_of[q]] += share
        chain_set = set(chain)
        for qa in chain:
            for qb in hw.graph[qa]:
                if qb in chain_set and qa < qb:
                    add_coupling(qa, qb, chain_strength)
                    intra_edges += 1
    phys_instance = IsingInstance(
        n=len(physical), couplings=couplings, h=h, family=instance.family, seed=instance.seed
    )
    return EmbeddedInstance(
        instance=phys_instance,
        vertex_order=physical,
        embedding=emb,
        logical=instance,
        chain_strength=chain_strength,
        intra_chain_edges=intra_edges,
    )


def unembed(physical_config, embedded: EmbeddedInstance) -> np.ndarray:
    """Majority vote within each chain; ties go to the value with the lower
    logical energy, resolved chain by chain in vertex order."""
    config = spin_config(physical_config)
    if config.size != embedded.instance.n:
        raise ValueError("physical configuration length mismatch")
    index_of = {q: i for i, q in enumerate(embedded.vertex_order)}
    logical = embedded.logical
    votes = {}
    ties = []
    for v, chain in embedded.embedding.chains.items():
        total = int(sum(config[index_of[q]] for q in chain))
        if total > 0:
            votes[v] = 1
        elif total < 0:
            votes[v] = -1
        else:
            votes[v] = 1  # provisional; refined below
            ties.append(v)
    out = np.array([votes[v] for v in range(logical.n)], dtype=np.int8)
    for v in sorted(ties):
        candidates = []
        for value in (1, -1):
            out[v] = value
            candidates.append((energy(logical, out), value))
        out[v] = min(candidates)[1]
    return out


# ----------------------------------------------------------------------
# serialization: edge-list graphs, chain-list embeddings
# ----------------------------------------------------------------------


def save_graph(g: ChimeraGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"chimera {g.rows} {g.cols}\n")
        for u, v in g.edges():
            fh.write(f"{u} {v}\n")


def load_graph(path) -> ChimeraGraph:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != "chimera":
            raise ValueError("expected 'chimera <rows> <cols>' header")
        g = build_chimera(int(header[1]), int(header[2]))
        expected = {tuple(sorted(e)) for e in g.graph.edges}
        for line in fh:
            line = line.strip()
            if not line:
                continue
            u, v = map(int, line.split())
            if tuple(sorted((u, v))) not in expected:
                raise ValueError(f"edge ({u},{v}) absent from the declared Chimera graph")
    return g


def save_embedding(emb: MinorEmbedding, path, hw: ChimeraGraph | None = None) -> None:
    with open(path, "w") as fh:
        if hw is not None:
            fh.write(f"chimera {hw.rows} {hw.cols}\n")
        for v in sorted(emb.chains):
            chain = " ".join(str(q) for q in emb.chains[v])
            fh.write(f"{v}: {chain}\n")


def load_embedding(path) -> tuple[MinorEmbedding, tuple[int, int] | None]:
    chains = {}
    dims = None
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("chimera"):
                _, r, c = line.split()
                dims = (int(r), int(c))
                continue
            head, _, rest = line.partition(":")
            chains[int(head)] = tuple(int(tok) for tok in rest.split())
    return MinorEmbedding(chains=chains), dims
