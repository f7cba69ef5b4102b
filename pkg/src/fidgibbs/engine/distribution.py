"""Outcome distributions, single-variable marginals and exact sampling."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..circuit import CircuitSpec
from ..errors import InfeasibleModelError, SpecificationError
from ..experiment import ExperimentSpec, ProbabilityTable, outcome_vectors
from ..fid import KinkRecord, WeightParams
from .brute import DEFAULT_CAP, brute_force_enumerate
from .eliminate import EliminationPlan
from .graph import FactorGraph, build_factor_graph

THREADS_ENV = "FIDGIBBS_THREADS"


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _outcome_length(source) -> int:
    if isinstance(source, CircuitSpec):
        return source.n_qubits
    return source.outcome_length


def outcome_graphs(source, params: WeightParams) -> list[FactorGraph]:
    return [build_factor_graph(source, params, o) for o in outcome_vectors(_outcome_length(source))]


def _map(fn, items, threads):
    # ordered by outcome index whatever the thread count
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def outcome_weights(source, params: WeightParams, method: str = "eliminate",
                    threads: int | None = None, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Unnormalized weight of each outcome vector, canonical order."""
    graphs = outcome_graphs(source, params)
    if method == "eliminate":
        fn = lambda g: EliminationPlan(g).partition()  # noqa: E731
    elif method == "brute":
        fn = lambda g: brute_force_enumerate(g, cap)  # noqa: E731
    else:
        raise SpecificationError(f"unknown method {method!r}")
    threads = default_threads() if threads is None else threads
    return np.array(_map(fn, graphs, threads), dtype=float)


def outcome_distribution(source: CircuitSpec | ExperimentSpec, params: WeightParams,
                         method: str = "eliminate", threads: int | None = None,
                         cap: int = DEFAULT_CAP) -> ProbabilityTable:
    """P(O) from the finite Gibbs field; outcomes of zero weight get probability 0.

    Raises InfeasibleModelError when every outcome has zero weight.
    """
    weights = outcome_weights(source, params, method, threads, cap)
    return ProbabilityTable.from_weights(_outcome_length(source), weights)


def variable_marginal(source, params: WeightParams, key: str) -> np.ndarray:
    """Marginal law of one variable, by clamping it to each grid value in turn."""
    graphs = outcome_graphs(source, params)
    if key not in graphs[0].variables:
        raise SpecificationError(f"no variable {key!r}")
    M = params.grid_size
    joint = np.array([[EliminationPlan(g.with_pin(key, m)).partition() for m in range(M)]
                      for g in graphs])
    total = joint.sum()
    if not total > 0.0:
        raise InfeasibleModelError("all outcomes have zero weight")
    return joint.sum(axis=0) / total


@dataclass
class SampleBatch:
    seed: int
    n_samples: int
    outcome_counts: dict[tuple[int, ...], int]
    trajectories: list[dict[str, int]] = field(default_factory=list)
    trajectory_outcomes: list[tuple[int, ...]] = field(default_factory=list)


def exact_sample(source, params: WeightParams, seed: int, n: int,
                 n_trajectories: int = 0, threads: int | None = None) -> SampleBatch:
    """Draw n outcome vectors; the first ``n_trajectories`` also get full trajectories.

    Outcomes come from one substream of the seed, trajectory i from its own
    spawned substream, so results do not depend on the thread count.
    """
    if n < 0 or n_trajectories < 0:
        raise SpecificationError("sample counts must be non-negative")
    graphs = outcome_graphs(source, params)
    plans = [EliminationPlan(g) for g in graphs]
    threads = default_threads() if threads is None else threads
    weights = np.array(_map(lambda p: p.partition(), plans, threads))
    table = ProbabilityTable.from_weights(_outcome_length(source), weights)

    root = np.random.SeedSequence(seed)
    outcome_seq, traj_seq = root.spawn(2)
    rng = np.random.default_rng(outcome_seq)
    draws = rng.choice(len(weights), size=n, p=table.probs)
    counts = np.bincount(draws, minlength=len(weights))
    batch = SampleBatch(seed, n, {o: int(c) for o, c in zip(table.outcomes, counts)})

    k = min(n_trajectories, n)
    streams = traj_seq.spawn(k)

    def one(i):
        return plans[draws[i]].sample(np.random.default_rng(streams[i]))

    batch.trajectories = _map(one, list(range(k)), threads)
    batch.trajectory_outcomes = [table.outcomes[draws[i]] for i in range(k)]
    return batch


def trajectory_kinks(graph: FactorGraph, trajectory: dict[str, int]) -> list[KinkRecord]:
    """The nonzero steps of one sampled trajectory."""
    M = graph.grid_size
    kinks = []
    for step in graph.steps:
        a, b = step.scope
        d = (trajectory[b] - trajectory[a]) % M
        if d:
            spin = graph.variables[b].spin
            kinks.append(KinkRecord(2 * np.pi * d / M, spin, step.segment))
    return kinks
