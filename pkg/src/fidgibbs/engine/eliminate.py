"""Exact sum-product elimination on the worldline factor tree.

Step chains between anchor variables (those touched by an indicator, or ending
a segment) are contracted into one M x M factor ``T**n`` where
``T[a, b] = w(b - a)``. The powers are cached per (epsilon, M, n), so the 2**N
per-outcome runs of a distribution share them. Congruence indicators pass
messages by circular convolution. The upward messages are kept so that
trajectories can be drawn top-down, exactly.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..errors import UnsupportedTopologyError
from ..fid import step_weight_table
from .graph import FactorGraph, Indicator


@lru_cache(maxsize=512)
def transfer_powers(epsilon: float, grid_size: int, n: int) -> tuple[np.ndarray, ...]:
    """(T**0, T**1, ..., T**n) for the circulant step matrix."""
    w = step_weight_table(epsilon, grid_size)
    idx = np.arange(grid_size)
    T = w[(idx[None, :] - idx[:, None]) % grid_size]
    powers = [np.eye(grid_size)]
    for _ in range(n):
        powers.append(powers[-1] @ T)
    for p in powers:
        p.setflags(write=False)
    return tuple(powers)


def circular_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """c[s] = sum_u a[u] * b[(s - u) mod M]."""
    M = len(a)
    idx = np.arange(M)
    return b[(idx[:, None] - idx[None, :]) % M] @ a


class _Transfer:
    def __init__(self, a, b, powers, interior):
        self.scope = (a, b)
        self.powers = powers
        self.matrix = powers[-1]
        self.interior = interior

    def message(self, target, incoming):
        if target == self.scope[0]:
            return self.matrix @ incoming[self.scope[1]]
        return self.matrix.T @ incoming[self.scope[0]]

    def child_weights(self, parent, value, children, incoming):
        (child,) = children
        row = self.matrix[value, :] if parent == self.scope[0] else self.matrix[:, value]
        return [np.arange(len(row))[:, None]], row * incoming[child]


class _Congruence:
    def __init__(self, ind: Indicator, grid_size: int):
        self.scope = ind.scope
        self.coeffs = dict(zip(ind.scope, ind.coeffs))
        self.offset = ind.offset
        self.M = grid_size

    def _signed(self, key, msg):
        # distribution of c * x given the distribution of x
        return msg if self.coeffs[key] == 1 else msg[(-np.arange(self.M)) % self.M]

    def message(self, target, incoming):
        M = self.M
        dist = np.zeros(M)
        dist[0] = 1.0
        for k in self.scope:
            if k != target:
                dist = circular_convolve(dist, self._signed(k, incoming[k]))
        c = self.coeffs[target]
        return dist[(self.offset - c * np.arange(M)) % M]

    def child_weights(self, parent, value, children, incoming):
        M = self.M
        grid = np.indices((M,) * len(children)).reshape(len(children), -1).T
        total = self.coeffs[parent] * value + grid @ np.array([self.coeffs[k] for k in children])
        weights = ((total - self.offset) % M == 0).astype(float)
        for i, k in enumerate(children):
            weights = weights * incoming[k][grid[:, i]]
        return [grid], weights


def _draw(rng, weights) -> int:
    cum = np.cumsum(weights)
    if not cum[-1] > 0.0:
        raise ValueError("cannot sample from zero weights")
    return int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))


class EliminationPlan:
    """Compiled tree for one factor graph; computes its weight and samples from it."""

    def __init__(self, graph: FactorGraph):
        self.graph = graph
        M = graph.grid_size
        self.M = M
        anchors = set()
        for ind in graph.indicators:
            anchors.update(ind.scope)
        for keys in graph.segments.values():
            anchors.update((keys[0], keys[-1]))
        in_segment = {k for keys in graph.segments.values() for k in keys}
        anchors.update(k for k in graph.variables if k not in in_segment)
        if sum(len(keys) - 1 for keys in graph.segments.values()) != len(graph.steps):
            raise UnsupportedTopologyError("step factors outside segment chains")

        self.unary = {k: np.ones(M) for k in graph.variables if k in anchors}
        self.factors = []
        for keys in graph.segments.values():
            last = 0
            for i in range(1, len(keys)):
                if keys[i] in anchors:
                    n = i - last
                    powers = transfer_powers(graph.epsilon, M, n)
                    self.factors.append(_Transfer(keys[last], keys[i], powers, keys[last + 1:i]))
                    last = i
        for ind in graph.indicators:
            if len(ind.scope) == 1:
                vec = np.zeros(M)
                vec[(ind.coeffs[0] * ind.offset) % M] = 1.0
                self.unary[ind.scope[0]] = self.unary[ind.scope[0]] * vec
            else:
                self.factors.append(_Congruence(ind, M))

        self.adjacent = {k: [] for k in self.unary}
        for i, f in enumerate(self.factors):
            for k in f.scope:
                self.adjacent[k].append(i)
        self._order = self._traverse()
        self._messages = None

    def _traverse(self):
        """DFS order per component as (root, [(factor, parent var, child vars), ...])."""
        seen_v, seen_f = set(), set()
        components = []
        for root in self.unary:
            if root in seen_v:
                continue
            seen_v.add(root)
            edges = []
            stack = [root]
            while stack:
                v = stack.pop()
                for fi in self.adjacent[v]:
                    if fi in seen_f:
                        continue
                    seen_f.add(fi)
                    children = [k for k in self.factors[fi].scope if k != v]
                    for c in children:
                        if c in seen_v:
                            raise UnsupportedTopologyError("factor graph has a cycle")
                        seen_v.add(c)
                        stack.append(c)
                    edges.append((fi, v, children))
            components.append((root, edges))
        return components

    def _upward(self):
        if self._messages is not None:
            return self._messages
        up_var = {}      # var -> message toward its parent factor
        up_factor = {}   # factor -> message toward its parent var
        for root, edges in self._order:
            for fi, parent, children in reversed(edges):
                for c in children:
                    msg = self.unary[c].copy()
                    for g in self.adjacent[c]:
                        if g != fi:
                            msg *= up_factor[g]
                    up_var[c] = msg
                up_factor[fi] = self.factors[fi].message(parent, {c: up_var[c] for c in children})
        self._messages = (up_var, up_factor)
        return self._messages

    def _root_belief(self, root, up_factor):
        belief = self.unary[root].copy()
        for g in self.adjacent[root]:
            belief *= up_factor[g]
        return belief

    def partition(self) -> float:
        """Sum over all configurations of the factor product."""
        _, up_factor = self._upward()
        z = 1.0
        for root, _edges in self._order:
            z *= float(self._root_belief(root, up_factor).sum())
        return z

    def sample(self, rng) -> dict[str, int]:
        """One configuration drawn exactly from the normalized factor product."""
        up_var, up_factor = self._upward()
        values: dict[str, int] = {}
        for root, edges in self._order:
            values[root] = _draw(rng, self._root_belief(root, up_factor))
            for fi, parent, children in edges:
                grids, weights = self.factors[fi].child_weights(parent, values[parent], children, up_var)
                pick = grids[0][_draw(rng, weights)]
                for k, m in zip(children, pick):
                    values[k] = int(m)
        for f in self.factors:
            if isinstance(f, _Transfer) and f.interior:
                self._bridge(f, values, rng)
        return values

    def _bridge(self, f: _Transfer, values, rng):
        n = len(f.interior) + 1
        T = f.powers[1]
        prev = values[f.scope[0]]
        end = values[f.scope[1]]
        for l, key in enumerate(f.interior, start=1):
            weights = T[prev, :] * f.powers[n - l][:, end]
            prev = _draw(rng, weights)
            values[key] = prev


def eliminate(graph: FactorGraph) -> float:
    """Unnormalized weight of the graph's outcome: the sum over all hidden variables."""
    return EliminationPlan(graph).partition()
