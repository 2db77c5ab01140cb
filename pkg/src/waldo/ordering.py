"""Node orderings for the factorizations.

A processing order lists the nodes in the order the walk-based builder visits
them. Every factor in WALDO is the LDL^T of A permuted by the reverse of that
order, so eliminating nodes happens back to front.
"""

# Python standard library
import heapq

# 3rd party imports from pypi
import numpy as np
from scipy.sparse.csgraph import reverse_cuthill_mckee

# local imports
from .sparse_core import Permutation
from .walk_game import STREAM_ORDERING

STRATEGIES = ("random", "md", "cm", "natural")


def minimum_degree_order(A):
    """Greedy minimum-degree elimination order on the graph of A: repeatedly
    eliminate the node of smallest current degree (smallest index on ties)
    and join its neighbors into a clique.
    @return order <list[int]>
    """
    n = A.n
    adjacency = []
    for i in range(n):
        cols, _ = A.row(i)
        adjacency.append({int(j) for j in cols if j != i})
    heap = [(len(adjacency[i]), i) for i in range(n)]
    heapq.heapify(heap)
    eliminated = [False] * n
    order = []
    while heap:
        degree, node = heapq.heappop(heap)
        if eliminated[node] or degree != len(adjacency[node]):
            # stale entry
            continue
        eliminated[node] = True
        order.append(node)
        neighbors = adjacency[node]
        for u in neighbors:
            adjacency[u].discard(node)
            adjacency[u] |= neighbors - {u}
        for u in neighbors:
            heapq.heappush(heap, (len(adjacency[u]), u))
        adjacency[node] = set()
    return order


def cuthill_mckee_order(A):
    """Cuthill-McKee order: scipy's reverse Cuthill-McKee, reversed back."""
    rcm = reverse_cuthill_mckee(A.csr.tocsr(), symmetric_mode=True)
    return np.asarray(rcm)[::-1]


def make_ordering(A, strategy="random", seed=0):
    """Processing order for the builders.
    @param strategy <str>:
        random: seeded shuffle,
        md: minimum-degree elimination order, reversed,
        cm: Cuthill-McKee order,
        natural: identity
    @return ordering <Permutation>
    """
    n = A.n
    if strategy == "natural":
        return Permutation.identity(n)
    if strategy == "random":
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), STREAM_ORDERING]))
        return Permutation.from_order(rng.permutation(n))
    if strategy == "md":
        return Permutation.from_order(minimum_degree_order(A)[::-1])
    if strategy == "cm":
        return Permutation.from_order(cuthill_mckee_order(A))
    raise ValueError(f"Unknown ordering strategy '{strategy}', choose from {STRATEGIES}")
