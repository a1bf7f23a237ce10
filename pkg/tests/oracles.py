"""Brute-force reference computations used as test oracles.

Nothing here imports the code under test; each function recomputes its
answer directly from the generative model.
"""

import itertools
import math
from collections import defaultdict

import numpy as np


def _bit_patterns(k):
    idx = np.arange(2 ** k)[:, None]
    return ((idx >> np.arange(k)) & 1).astype(bool)


def enumerate_tests(N, n, rates_for_seed):
    """Exact law of total tests under consecutive pooling.

    Pools are the blocks ``[0, n), [n, 2n), ...``.  The seed is uniform over
    the N nodes; ``rates_for_seed(s)`` gives every node's infection
    probability when ``s`` is the seed (entry ``s`` is ignored).  All
    ``2**(N-1)`` infection patterns are enumerated.
    """
    pool_of = np.arange(N) // n
    pools = N // n
    law = defaultdict(float)
    patterns = _bit_patterns(N - 1)
    for s in range(N):
        others = np.array([j for j in range(N) if j != s])
        rates = np.asarray(rates_for_seed(s), dtype=float)[others]
        weight = np.prod(np.where(patterns, rates, 1.0 - rates), axis=1) / N
        positive = np.zeros((len(patterns), pools), dtype=bool)
        positive[:, pool_of[s]] = True
        for col, j in enumerate(others):
            positive[:, pool_of[j]] |= patterns[:, col]
        totals = pools + n * positive.sum(axis=1)
        for t, w in zip(totals.tolist(), weight.tolist()):
            law[t] += w
    return dict(law)


def enumerate_dorfman(N, n, v):
    return enumerate_tests(N, n, lambda s: np.full(N, v))


def enumerate_network(N, n, m, p, q, alpha):
    """Seed infects same-community nodes w.p. p*alpha, the rest w.p. q*alpha."""
    block = np.arange(N) // m

    def rates(s):
        return np.where(block == block[s], p * alpha, q * alpha)

    return enumerate_tests(N, n, rates)


def enumerate_network_full(N, n, m, p, q, alpha):
    """Same law, enumerating edge draws and transmission draws separately.

    Only pairs touching the seed matter for a one-generation epidemic; every
    other pair sums out.  Cost is ``N * 4**(N-1)``, so keep ``N`` small.
    """
    block = np.arange(N) // m
    pool_of = np.arange(N) // n
    pools = N // n
    law = defaultdict(float)
    for s in range(N):
        others = [j for j in range(N) if j != s]
        for edges in itertools.product((0, 1), repeat=N - 1):
            pe = 1.0
            for j, e in zip(others, edges):
                r = p if block[j] == block[s] else q
                pe *= r if e else 1.0 - r
            if pe == 0.0:
                continue
            for trans in itertools.product((0, 1), repeat=N - 1):
                pt = 1.0
                pos = {pool_of[s]}
                for j, e, t in zip(others, edges, trans):
                    pt *= alpha if t else 1.0 - alpha
                    if e and t:
                        pos.add(pool_of[j])
                law[pools + n * len(pos)] += pe * pt / N
    return dict(law)


def total_variation(a, b):
    keys = set(a) | set(b)
    return 0.5 * sum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)


def set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def modularity_dense(adjacency, blocks):
    """Newman modularity from the adjacency matrix definition."""
    A = np.asarray(adjacency, dtype=float)
    k = A.sum(axis=1)
    two_m = A.sum()
    label = np.empty(len(A), dtype=int)
    for c, members in enumerate(blocks):
        label[list(members)] = c
    same = label[:, None] == label[None, :]
    return float(((A - np.outer(k, k) / two_m) * same).sum() / two_m)


def best_partition_bruteforce(adjacency):
    best = None
    for part in set_partitions(range(len(adjacency))):
        q = modularity_dense(adjacency, part)
        if best is None or q > best[0] + 1e-12:
            best = (q, part)
    return best


def simulate_dorfman_model(N, n, v, replicates, seed, chunk=100_000):
    """Replicates of the independent-infection model: node 0 always infected."""
    rng = np.random.default_rng(seed)
    totals = []
    pools = N // n
    done = 0
    while done < replicates:
        k = min(chunk, replicates - done)
        inf = rng.random((k, N)) < v
        inf[:, 0] = True
        positive = inf.reshape(k, pools, n).any(axis=2).sum(axis=1)
        totals.append(pools + n * positive)
        done += k
    return np.concatenate(totals)


def star_expected_infected(leaves, alpha):
    """Uniform seed on a star: centre infects each leaf, a leaf only the centre."""
    total = leaves + 1
    return (1 + leaves * alpha) / total + leaves * (1 + alpha) / total


def binom_sd(trials, prob):
    return math.sqrt(trials * prob * (1 - prob))
