"""Edge-set analytics over sequences of factor networks."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .netinfer import FactorNetwork

__all__ = ["EdgeKey", "edge_set", "jaccard", "rolling_mean", "edge_counts", "out_degree",
           "is_dag", "topological_sort"]


class EdgeKey(NamedTuple):
    src: str
    dst: str
    lag: int

    def canonical(self) -> "EdgeKey":
        """Undirected form for lag-0 correlation edges (``src <= dst``)."""
        if self.lag == 0 and self.src > self.dst:
            return EdgeKey(self.dst, self.src, 0)
        return self


def edge_set(net: FactorNetwork) -> set[EdgeKey]:
    """Significant edges as keys; weights and signs are ignored."""
    keys = {EdgeKey(e.src, e.dst, e.lag) for e in net.significant_edges()}
    if net.kind == "correlation":
        keys = {k.canonical() for k in keys}
    return keys


def jaccard(e_prev, e_curr) -> float:
    """|A & B| / |A | B|, taken as 1.0 when both sets are empty."""
    a, b = set(e_prev), set(e_curr)
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def rolling_mean(x, k: int = 4) -> np.ndarray:
    """Trailing mean over ``k`` values; the first ``k - 1`` positions are dropped."""
    if k < 1:
        raise ValueError("k must be at least 1")
    x = np.asarray(x, dtype=float)
    if x.size < k:
        return np.empty(0)
    c = np.cumsum(np.insert(x, 0, 0.0))
    return (c[k:] - c[:-k]) / k


def edge_counts(net: FactorNetwork) -> tuple[int, int, int]:
    """(total, instantaneous, lagged) significant edge counts."""
    inst = sum(1 for e in net.significant_edges() if e.lag == 0)
    lagged = sum(1 for e in net.significant_edges() if e.lag > 0)
    return inst + lagged, inst, lagged


def out_degree(net: FactorNetwork, factor: str, distinct: bool = False) -> int:
    """Significant edges leaving ``factor`` towards other factors, over all lags.

    With ``distinct`` each influenced factor is counted once.
    """
    if factor not in net.names:
        raise KeyError(f"unknown factor {factor!r}")
    edges = [e for e in net.significant_edges() if e.src == factor and e.dst != factor]
    if net.kind == "correlation":
        edges += [e for e in net.significant_edges()
                  if e.lag == 0 and e.dst == factor and e.src != factor]
    if distinct:
        return len({e.dst if e.src == factor else e.src for e in edges})
    return len(edges)


def topological_sort(adj: np.ndarray) -> list[int] | None:
    """Topological order of the graph with ``adj[i, j] != 0`` meaning ``j -> i``; None if cyclic."""
    adj = np.asarray(adj) != 0
    n = adj.shape[0]
    indeg = adj.sum(axis=1).astype(int)
    ready = [i for i in range(n) if indeg[i] == 0]
    order = []
    while ready:
        j = ready.pop(0)
        order.append(j)
        for i in np.nonzero(adj[:, j])[0]:
            indeg[i] -= 1
            if indeg[i] == 0:
                ready.append(int(i))
    return order if len(order) == n else None


def is_dag(net: FactorNetwork) -> bool:
    """Whether the significant instantaneous edges of a causal network are acyclic."""
    return topological_sort(net.adjacency(0)) is not None
