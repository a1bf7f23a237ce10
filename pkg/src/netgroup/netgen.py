"""Networks: SBM generation, edge-list I/O, Louvain communities, p/q estimation."""

from __future__ import annotations

import csv
import io
import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import DegeneratePartition, EmptyInput, ParameterError, ParseError

_SEP = re.compile(r"[,\t ]+")
_TIE = 1e-12


@dataclass(frozen=True, eq=False)
class Network:
    """Undirected simple graph on nodes ``0..node_count-1``.

    ``edges`` is an ``(E, 2)`` int array with ``u < v`` in each row, sorted
    lexicographically, so two networks with the same edge set compare equal
    no matter how they were built.
    """

    node_count: int
    edges: np.ndarray
    node_labels: Optional[Tuple[str, ...]] = None

    @classmethod
    def from_edges(cls, node_count: int, pairs: Iterable[Tuple[int, int]],
                   node_labels: Optional[Sequence[str]] = None) -> "Network":
        arr = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs,
                         dtype=np.int64).reshape(-1, 2)
        if len(arr) and (arr.min() < 0 or arr.max() >= node_count):
            raise ParameterError("edge endpoint outside 0..node_count-1")
        arr = arr[arr[:, 0] != arr[:, 1]]
        arr = np.sort(arr, axis=1)
        arr = np.unique(arr, axis=0) if len(arr) else arr
        arr.setflags(write=False)
        labels = tuple(str(x) for x in node_labels) if node_labels is not None else None
        if labels is not None and len(labels) != node_count:
            raise ParameterError("node_labels must have one entry per node")
        return cls(node_count, arr, labels)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def edge_set(self) -> set:
        return {(int(u), int(v)) for u, v in self.edges}

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (self.node_count == other.node_count
                and np.array_equal(self.edges, other.edges)
                and self.node_labels == other.node_labels)

    def __hash__(self):
        return hash((self.node_count, self.edges.tobytes(), self.node_labels))

    def csr(self) -> Tuple[np.ndarray, np.ndarray]:
        """``(indptr, indices)`` adjacency; neighbours listed in ascending order."""
        cached = self.__dict__.get("_csr")
        if cached is None:
            both = np.concatenate([self.edges, self.edges[:, ::-1]]) if len(self.edges) else \
                np.zeros((0, 2), dtype=np.int64)
            order = np.lexsort((both[:, 1], both[:, 0]))
            both = both[order]
            counts = np.bincount(both[:, 0], minlength=self.node_count)
            indptr = np.concatenate([[0], np.cumsum(counts)])
            cached = (indptr, both[:, 1].copy())
            object.__setattr__(self, "_csr", cached)
        return cached

    def neighbors(self, node: int) -> np.ndarray:
        indptr, indices = self.csr()
        return indices[indptr[node]:indptr[node + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.csr()[0])

    def label(self, node: int) -> str:
        return self.node_labels[node] if self.node_labels is not None else str(node)

    def to_networkx(self):
        import networkx as nx

        g = nx.Graph()
        g.add_nodes_from(range(self.node_count))
        g.add_edges_from(map(tuple, self.edges.tolist()))
        return g


@dataclass(frozen=True, eq=False)
class Partition:
    community_of: np.ndarray
    community_sizes: Dict[int, int]
    modularity: float
    uniform: bool = True
    history: Tuple[float, ...] = field(default=())

    @classmethod
    def from_labels(cls, network: Network, labels: Sequence[int], resolution: float = 1.0,
                    history: Tuple[float, ...] = ()) -> "Partition":
        arr = np.asarray(labels, dtype=np.int64)
        if arr.shape != (network.node_count,):
            raise ParameterError("need exactly one community per node")
        arr.setflags(write=False)
        ids, counts = np.unique(arr, return_counts=True)
        sizes = {int(c): int(k) for c, k in zip(ids, counts)}
        return cls(arr, sizes, modularity(network, arr, resolution),
                   uniform=len(set(sizes.values())) <= 1, history=tuple(history))

    @property
    def community_count(self) -> int:
        return len(self.community_sizes)

    def members(self, community: int) -> np.ndarray:
        return np.flatnonzero(self.community_of == community)

    def effective_m(self) -> int:
        """Rounded mean community size, for plugging into the closed forms."""
        return int(round(len(self.community_of) / self.community_count))


def modularity(network: Network, labels: Sequence[int], resolution: float = 1.0) -> float:
    labels = np.asarray(labels)
    L = network.edge_count
    if L == 0:
        return 0.0
    u, v = network.edges[:, 0], network.edges[:, 1]
    internal = labels[u] == labels[v]
    _, inv = np.unique(labels, return_inverse=True)
    k = inv.max() + 1
    l_in = np.bincount(inv[u[internal]], minlength=k).astype(float)
    deg = np.bincount(inv, weights=network.degrees().astype(float), minlength=k)
    return float(np.sum(l_in / L - resolution * (deg / (2.0 * L)) ** 2))


# -- generation ------------------------------------------------------------------


def block_labels(N: int, m: int) -> np.ndarray:
    """Consecutive blocks of ``m`` nodes; a shorter final block takes the remainder."""
    return np.arange(N, dtype=np.int64) // m


def generate_sbm(N: int, m: int, p: float, q: float, seed: int) -> Tuple[Network, Partition]:
    """Stochastic block model with communities of ``m`` consecutive nodes.

    Pairs are visited in lexicographic order and each consumes exactly one
    uniform draw, so the edge set is a pure function of the arguments.
    """
    if not (isinstance(N, int) and N >= 1 and isinstance(m, int) and m >= 1):
        raise ParameterError("N and m must be positive integers")
    if not 0.0 <= q <= p <= 1.0:
        raise ParameterError(f"need 0 <= q <= p <= 1, got p={p}, q={q}")
    rng = np.random.default_rng(seed)
    labels = block_labels(N, m)
    iu, ju = np.triu_indices(N, k=1)
    draws = rng.random(len(iu))
    prob = np.where(labels[iu] == labels[ju], p, q)
    keep = draws < prob
    net = Network.from_edges(N, np.column_stack([iu[keep], ju[keep]]))
    part = Partition.from_labels(net, labels)
    return net, part


# -- edge-list I/O ---------------------------------------------------------------


def _lines(source) -> Iterable[str]:
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    if isinstance(source, str):
        source = io.StringIO(source)
    for raw in source:
        if isinstance(raw, (bytes, bytearray)):
            raw = raw.decode("utf-8")
        yield raw


def load_edge_list(source) -> Network:
    """Parse a whitespace/comma/tab separated edge list.

    ``source`` may be bytes, a str holding the file contents, or any iterable
    of lines (an open file in text or binary mode).  Node indices follow the
    order in which identifiers first appear.
    """
    index: Dict[str, int] = {}
    pairs = []
    loops = 0
    for lineno, raw in enumerate(_lines(source), start=1):
        line = raw.strip()
        if not line or line[0] in "#%":
            continue
        tokens = [t for t in _SEP.split(line) if t]
        if len(tokens) < 2:
            raise ParseError(f"expected two node ids, got {line!r}", line=lineno)
        a, b = tokens[0], tokens[1]
        ia = index.setdefault(a, len(index))
        ib = index.setdefault(b, len(index))
        if ia == ib:
            loops += 1
            continue
        pairs.append((ia, ib))
    if loops:
        warnings.warn(f"dropped {loops} self-loop(s)", stacklevel=2)
    if not pairs:
        raise EmptyInput("no edges found")
    return Network.from_edges(len(index), pairs, node_labels=list(index))


def read_edge_list(path) -> Network:
    with open(path, "rb") as fh:
        return load_edge_list(fh)


def format_edge_list(network: Network) -> str:
    return "".join(f"{network.label(u)} {network.label(v)}\n" for u, v in network.edges.tolist())


def write_edge_list(network: Network, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_edge_list(network))


def write_partition(network: Network, partition: Partition, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["node", "community"])
    for node, comm in enumerate(partition.community_of.tolist()):
        w.writerow([network.label(node), comm])


def read_partition(network: Network, source) -> Partition:
    """Read a ``node,community`` CSV keyed by the network's node labels."""
    lookup = {network.label(i): i for i in range(network.node_count)}
    labels = [None] * network.node_count
    reader = csv.reader(_lines(source))
    header = next(reader, None)
    if header is None or [h.strip() for h in header[:2]] != ["node", "community"]:
        raise ParseError("partition file must start with header 'node,community'", line=1)
    for lineno, row in enumerate(reader, start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) < 2:
            raise ParseError("expected node,community", line=lineno)
        node, comm = row[0].strip(), row[1].strip()
        if node not in lookup:
            raise ParseError(f"unknown node {node!r}", line=lineno)
        try:
            labels[lookup[node]] = int(comm)
        except ValueError:
            raise ParseError(f"community id must be an integer, got {comm!r}", line=lineno) from None
    missing = [network.label(i) for i, c in enumerate(labels) if c is None]
    if missing:
        raise ParseError(f"{len(missing)} node(s) without a community, e.g. {missing[0]!r}")
    return Partition.from_labels(network, labels)


# -- Louvain ---------------------------------------------------------------------


def _one_level(adj: List[Dict[int, float]], selfw: List[float], m2: float, rng: np.random.Generator,
               resolution: float) -> Tuple[List[int], bool]:
    size = len(adj)
    deg = [2.0 * selfw[i] + sum(adj[i].values()) for i in range(size)]
    comm = list(range(size))
    tot = deg[:]
    moved_any = False
    while True:
        improvement = 0.0
        for i in rng.permutation(size).tolist():
            ci = comm[i]
            ki = deg[i]
            links: Dict[int, float] = {}
            for j, w in adj[i].items():
                links[comm[j]] = links.get(comm[j], 0.0) + w
            tot[ci] -= ki
            best_c = ci
            stay = best_gain = links.get(ci, 0.0) - resolution * tot[ci] * ki / m2
            for c in sorted(links):
                gain = links[c] - resolution * tot[c] * ki / m2
                if gain > best_gain + _TIE or (abs(gain - best_gain) <= _TIE and c < best_c):
                    best_c, best_gain = c, gain
            tot[best_c] += ki
            if best_c != ci:
                comm[i] = best_c
                improvement += best_gain - stay
                moved_any = True
        # tie-only moves cannot raise modularity; stop rather than cycle
        if improvement <= _TIE:
            break
    return comm, moved_any


def louvain(network: Network, seed: int = 0, resolution: float = 1.0) -> Partition:
    """Greedy modularity maximisation by local moves and aggregation.

    Each pass visits nodes in a seeded random order and moves a node to the
    neighbouring community with the largest modularity gain (ties go to the
    lowest community id).  Communities are then collapsed into weighted
    super-nodes and the process repeats until no node moves.  Isolated nodes
    end up as singletons.

    Final community ids are numbered by each community's smallest node.
    """
    if network.node_count == 0:
        raise ParameterError("empty network")
    rng = np.random.default_rng(seed)
    size = network.node_count
    adj: List[Dict[int, float]] = [dict() for _ in range(size)]
    for u, v in network.edges.tolist():
        adj[u][v] = adj[u].get(v, 0.0) + 1.0
        adj[v][u] = adj[v].get(u, 0.0) + 1.0
    selfw = [0.0] * size
    m2 = 2.0 * network.edge_count
    membership = np.arange(size)
    history = [modularity(network, membership, resolution)]
    if m2 == 0:
        return Partition.from_labels(network, membership, resolution, tuple(history))

    while True:
        comm, moved = _one_level(adj, selfw, m2, rng, resolution)
        if not moved:
            break
        remap: Dict[int, int] = {}
        for c in comm:
            remap.setdefault(c, len(remap))
        comm = [remap[c] for c in comm]
        membership = np.asarray(comm)[membership]
        history.append(modularity(network, membership, resolution))
        k = len(remap)
        new_adj: List[Dict[int, float]] = [dict() for _ in range(k)]
        new_self = [0.0] * k
        for i in range(len(adj)):
            ci = comm[i]
            new_self[ci] += selfw[i]
            for j, w in adj[i].items():
                cj = comm[j]
                if ci == cj:
                    if i < j:
                        new_self[ci] += w
                else:
                    new_adj[ci][cj] = new_adj[ci].get(cj, 0.0) + w
        adj, selfw = new_adj, new_self
        if k == 1:
            break

    return Partition.from_labels(network, canonical_labels(membership), resolution, tuple(history))


def canonical_labels(labels: Sequence[int]) -> np.ndarray:
    """Relabel communities 0,1,... in order of their smallest member."""
    remap: Dict[int, int] = {}
    out = np.empty(len(labels), dtype=np.int64)
    for i, c in enumerate(np.asarray(labels).tolist()):
        out[i] = remap.setdefault(c, len(remap))
    return out


# -- estimates and summaries ---------------------------------------------------


def estimate_pq(network: Network, partition: Partition) -> Tuple[float, Optional[float]]:
    """Edge densities inside and between communities.

    Returns ``(p_hat, q_hat)``; ``q_hat`` is ``None`` when there is a single
    community (no between-community pairs).
    """
    labels = partition.community_of
    if len(labels) != network.node_count:
        raise ParameterError("partition does not cover the network")
    sizes = np.array(list(partition.community_sizes.values()), dtype=np.int64)
    within_pairs = int(np.sum(sizes * (sizes - 1) // 2))
    all_pairs = network.node_count * (network.node_count - 1) // 2
    between_pairs = all_pairs - within_pairs
    u, v = network.edges[:, 0], network.edges[:, 1]
    within_edges = int(np.sum(labels[u] == labels[v]))
    between_edges = network.edge_count - within_edges
    if within_pairs == 0:
        raise DegeneratePartition("all communities are singletons; p is undefined")
    p_hat = within_edges / within_pairs
    q_hat = between_edges / between_pairs if between_pairs else None
    return p_hat, q_hat


class PartitionStats(NamedTuple):
    communities: int
    mean_size: float
    min_size: int
    max_size: int


def partition_stats(partition: Partition) -> PartitionStats:
    sizes = list(partition.community_sizes.values())
    return PartitionStats(len(sizes), math.fsum(sizes) / len(sizes), min(sizes), max(sizes))
