"""Seed-node epidemics, pooling strategies, two-stage testing and Monte Carlo.

Every replicate draws from its own Philox stream keyed by the master seed
with the replicate index in the counter, so results do not depend on how
replicates are scheduled across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ParameterError
from .netgen import Network, Partition, block_labels
from .params import ceil_div

SIM_STRATEGIES = ("dorfman", "network", "perfect")


@dataclass(frozen=True, eq=False)
class InfectionState:
    seed: int
    infected_nodes: np.ndarray  # sorted, includes the seed
    node_count: int

    @property
    def infected(self) -> np.ndarray:
        mask = np.zeros(self.node_count, dtype=bool)
        mask[self.infected_nodes] = True
        return mask

    @property
    def count(self) -> int:
        return len(self.infected_nodes)


@dataclass(frozen=True, eq=False)
class GroupAssignment:
    group_of: np.ndarray
    group_sizes: np.ndarray
    n: int

    @classmethod
    def from_order(cls, order: np.ndarray, n: int) -> "GroupAssignment":
        """Chunk a node ordering into consecutive groups of ``n``."""
        N = len(order)
        group_of = np.empty(N, dtype=np.int64)
        group_of[order] = np.arange(N) // n
        sizes = np.full(ceil_div(N, n), n, dtype=np.int64)
        if N % n:
            sizes[-1] = N % n
        return cls(group_of, sizes, n)

    @property
    def group_count(self) -> int:
        return len(self.group_sizes)

    def members(self, group: int) -> np.ndarray:
        return np.flatnonzero(self.group_of == group)


@dataclass
class SimStats:
    strategy: str
    n: int
    replicate_tests: np.ndarray
    seed_nodes: np.ndarray
    infected_counts: np.ndarray
    positive_groups: np.ndarray
    master_seed: int

    @property
    def replicates(self) -> int:
        return len(self.replicate_tests)

    @property
    def mean(self) -> float:
        return float(np.mean(self.replicate_tests))

    @property
    def std(self) -> float:
        if self.replicates < 2:
            return 0.0
        return float(np.std(self.replicate_tests, ddof=1))

    @property
    def std_error(self) -> float:
        return self.std / math.sqrt(self.replicates)


def replicate_rng(master_seed: int, replicate: int) -> np.random.Generator:
    """Independent stream for one replicate: Philox keyed by the master seed."""
    bitgen = np.random.Philox(key=master_seed, counter=[0, 0, 0, replicate])
    return np.random.Generator(bitgen)


def _check_n(N: int, n: int) -> None:
    if not 1 <= n <= N:
        raise ParameterError(f"need 1 <= n <= N, got n={n}, N={N}")


# -- epidemics -------------------------------------------------------------------


def seed_epidemic(network: Network, alpha: float, rng: np.random.Generator) -> InfectionState:
    """Pick a uniform seed and infect each of its neighbours with probability alpha."""
    if network.node_count == 0:
        raise ParameterError("empty network")
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    seed = int(rng.integers(network.node_count))
    nbrs = network.neighbors(seed)
    hit = nbrs[rng.random(len(nbrs)) < alpha]
    infected = np.sort(np.append(hit, seed))
    return InfectionState(seed, infected, network.node_count)


def sbm_epidemic(labels: np.ndarray, p: float, q: float, alpha: float,
                 rng: np.random.Generator) -> InfectionState:
    """Seed epidemic on a freshly drawn SBM network.

    Only the seed's incident pairs influence a single-generation epidemic,
    so those are the only pairs sampled: one edge draw and one transmission
    draw per other node.
    """
    N = len(labels)
    seed = int(rng.integers(N))
    prob = np.where(labels == labels[seed], p, q)
    edge = rng.random(N) < prob
    spread = rng.random(N) < alpha
    hit = edge & spread
    hit[seed] = True
    return InfectionState(seed, np.flatnonzero(hit), N)


# -- grouping --------------------------------------------------------------------


def group_random(N: int, n: int, rng: np.random.Generator) -> GroupAssignment:
    _check_n(N, n)
    return GroupAssignment.from_order(rng.permutation(N), n)


def community_order(partition: Partition, n: int) -> np.ndarray:
    """Node ordering whose consecutive n-chunks form the community pooling.

    Communities go largest first (ties by id), members ascending.  Each
    community contributes its full groups up front; the leftover members of
    all communities follow, still in community order.
    """
    labels = np.asarray(partition.community_of)
    comms = sorted(partition.community_sizes, key=lambda c: (-partition.community_sizes[c], c))
    full, rest = [], []
    for c in comms:
        members = np.flatnonzero(labels == c)
        cut = (len(members) // n) * n
        full.append(members[:cut])
        rest.append(members[cut:])
    return np.concatenate(full + rest)


def group_by_community(partition: Partition, n: int) -> GroupAssignment:
    N = len(partition.community_of)
    _check_n(N, n)
    return GroupAssignment.from_order(community_order(partition, n), n)


def group_perfect(state: InfectionState, n: int) -> GroupAssignment:
    """Oracle pooling: infected nodes first, so they fill the fewest groups."""
    N = state.node_count
    _check_n(N, n)
    rest = np.setdiff1d(np.arange(N), state.infected_nodes, assume_unique=True)
    return GroupAssignment.from_order(np.concatenate([state.infected_nodes, rest]), n)


# -- testing ---------------------------------------------------------------------


def two_stage_outcome(state: InfectionState, assignment: GroupAssignment) -> tuple:
    """``(positive_groups, total_tests)`` for perfect (error-free) tests."""
    if len(assignment.group_of) != state.node_count:
        raise ParameterError("assignment and infection state cover different node sets")
    positive = np.unique(assignment.group_of[state.infected_nodes])
    total = assignment.group_count + int(assignment.group_sizes[positive].sum())
    return len(positive), total


def run_two_stage(state: InfectionState, assignment: GroupAssignment) -> int:
    """One test per group, then one per member of every positive group."""
    return two_stage_outcome(state, assignment)[1]


# -- Monte Carlo -----------------------------------------------------------------


def _run_replicates(draw: Callable[[np.random.Generator], InfectionState], N: int, n: int,
                    strategy: str, fixed: Optional[GroupAssignment], replicates: int,
                    master_seed: int, workers: int) -> SimStats:
    if replicates < 1:
        raise ParameterError("replicates must be >= 1")
    if strategy not in SIM_STRATEGIES:
        raise ParameterError(f"unknown strategy {strategy!r}")
    _check_n(N, n)
    out = np.zeros((replicates, 4), dtype=np.int64)

    def work(lo: int, hi: int) -> None:
        for r in range(lo, hi):
            rng = replicate_rng(master_seed, r)
            state = draw(rng)
            if strategy == "dorfman":
                assignment = group_random(N, n, rng)
            elif strategy == "network":
                assignment = fixed
            else:
                assignment = group_perfect(state, n)
            g, t = two_stage_outcome(state, assignment)
            out[r] = (state.seed, state.count, g, t)

    if workers <= 1:
        work(0, replicates)
    else:
        bounds = np.linspace(0, replicates, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, bounds[:-1], bounds[1:]))

    return SimStats(strategy, n, out[:, 3].copy(), out[:, 0].copy(), out[:, 1].copy(),
                    out[:, 2].copy(), master_seed)


def monte_carlo(network: Network, partition: Optional[Partition], alpha: float, n: int,
                strategy: str, replicates: int, master_seed: int = 0,
                workers: int = 1) -> SimStats:
    """Repeat epidemic + pooling + two-stage testing on a fixed network.

    ``partition`` is required for the ``network`` strategy only; its pooling
    is computed once.  Output is identical for any ``workers`` value.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    fixed = None
    if strategy == "network":
        if partition is None:
            raise ParameterError("network strategy needs a partition")
        fixed = group_by_community(partition, n)
    network.csr()  # build once, before any threads start
    return _run_replicates(lambda rng: seed_epidemic(network, alpha, rng), network.node_count, n,
                           strategy, fixed, replicates, master_seed, workers)


def monte_carlo_sbm(N: int, m: int, p: float, q: float, alpha: float, n: int, strategy: str,
                    replicates: int, master_seed: int = 0, workers: int = 1) -> SimStats:
    """Monte Carlo over the SBM ensemble: a fresh network for every replicate.

    This is the setting the closed forms describe, so it is the one to use
    when comparing simulated means against them.
    """
    if not 0.0 <= q <= p <= 1.0 or not 0.0 <= alpha <= 1.0:
        raise ParameterError("need 0 <= q <= p <= 1 and alpha in [0, 1]")
    labels = block_labels(N, m)
    fixed = None
    if strategy == "network":
        sizes = np.bincount(labels)
        part = Partition(labels, {i: int(s) for i, s in enumerate(sizes)}, float("nan"),
                         uniform=N % m == 0)
        fixed = group_by_community(part, n)
    return _run_replicates(lambda rng: sbm_epidemic(labels, p, q, alpha, rng), N, n, strategy,
                           fixed, replicates, master_seed, workers)
