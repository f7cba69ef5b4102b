"""Factor graphs over discretized worldline angles.

Each free-propagation segment of L steps is a chain of L+1 grid-angle variables
joined by step factors w(phi_l - phi_{l-1}). Everything else is an indicator of
a linear congruence ``sum(c_i * m_i) == offset (mod M)`` with c_i = +/-1:
Hadamard pin, CNOT rule, measurement pin, source constraints. The N-ary GHZ
sum-zero source is split into a chain of running-sum indicators through
auxiliary variables so the graph stays a tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from ..angles import grid_index
from ..circuit import CircuitSpec, circuit_for, segment_ids, validate
from ..errors import SpecificationError
from ..experiment import ExperimentSpec, SourceKind, check_outcome
from ..fid import WeightParams, step_weight_table


@dataclass(frozen=True)
class Variable:
    key: str
    spin: int | None  # None for auxiliary source variables
    time: int
    segment: str | None = None


@dataclass(frozen=True)
class StepFactor:
    scope: tuple[str, str]
    segment: str


@dataclass(frozen=True)
class Indicator:
    """1 when sum(coeffs[i] * value[scope[i]]) == offset (mod M), else 0."""

    scope: tuple[str, ...]
    coeffs: tuple[int, ...]
    offset: int
    kind: str

    def __post_init__(self):
        if len(self.scope) != len(self.coeffs) or not self.scope:
            raise SpecificationError("indicator scope and coefficients differ in length")
        if any(c not in (1, -1) for c in self.coeffs):
            raise SpecificationError("indicator coefficients must be +1 or -1")
        if len(set(self.scope)) != len(self.scope):
            raise SpecificationError("indicator scope repeats a variable")


Factor = StepFactor | Indicator


@dataclass(frozen=True, eq=False)
class FactorGraph:
    kind: SourceKind
    grid_size: int
    epsilon: float
    outcome: tuple[int, ...]
    variables: Mapping[str, Variable]
    segments: Mapping[str, tuple[str, ...]]
    steps: tuple[StepFactor, ...]
    indicators: tuple[Indicator, ...]
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "variables", MappingProxyType(dict(self.variables)))
        object.__setattr__(self, "segments", MappingProxyType(dict(self.segments)))
        w = step_weight_table(self.epsilon, self.grid_size)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        for f in self.factors:
            for k in f.scope:
                if k not in self.variables:
                    raise SpecificationError(f"factor refers to unknown variable {k!r}")

    @property
    def factors(self) -> tuple[Factor, ...]:
        return self.steps + self.indicators

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    def with_pin(self, key: str, m: int, kind: str = "clamp") -> FactorGraph:
        """Copy with one extra unary indicator fixing ``key`` to grid index m."""
        pin = Indicator((key,), (1,), int(m) % self.grid_size, kind)
        return replace(self, indicators=self.indicators + (pin,))

    def indicators_hold(self, assignment: Mapping[str, int]) -> bool:
        M = self.grid_size
        return all(
            (sum(c * assignment[k] for c, k in zip(f.coeffs, f.scope)) - f.offset) % M == 0
            for f in self.indicators
        )

    def configuration_weight(self, assignment: Mapping[str, int]) -> float:
        """Product of every factor at one full assignment of grid indices."""
        if not self.indicators_hold(assignment):
            return 0.0
        M = self.grid_size
        return math.prod(float(self.weights[(assignment[b] - assignment[a]) % M])
                         for a, b in (s.scope for s in self.steps))

    def locality_violations(self) -> list[Factor]:
        """Factors touching more than two worldlines or more than two adjacent timesteps."""
        bad = []
        for f in self.factors:
            vs = [self.variables[k] for k in f.scope if self.variables[k].spin is not None]
            if not vs:
                continue
            times = [v.time for v in vs]
            if len({v.spin for v in vs}) > 2 or max(times) - min(times) > 1:
                bad.append(f)
        return bad

    def is_tree(self) -> bool:
        """True when the variable/factor incidence graph has no cycle."""
        parent: dict = {}

        def find(x):
            parent.setdefault(x, x)
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i, f in enumerate(self.factors):
            for k in f.scope:
                a, b = find(("f", i)), find(("v", k))
                if a == b:
                    return False
                parent[a] = b
        return True


class _Builder:
    def __init__(self, grid_size: int):
        self.M = grid_size
        self.variables: dict[str, Variable] = {}
        self.segments: dict[str, tuple[str, ...]] = {}
        self.steps: list[StepFactor] = []
        self.indicators: list[Indicator] = []

    def var(self, key, spin, time, segment=None) -> str:
        self.variables[key] = Variable(key, spin, time, segment)
        return key

    def segment(self, label: str, spin: int, t0: int, length: int, start: str | None = None):
        if start is None:
            start = self.var(f"{label}@0", spin, t0, label)
        keys = [start]
        t = self.variables[start].time
        for l in range(1, length + 1):
            keys.append(self.var(f"{label}@{l}", spin, t + l, label))
        for a, b in zip(keys, keys[1:]):
            self.steps.append(StepFactor((a, b), label))
        self.segments[label] = tuple(keys)
        return keys

    def indicator(self, scope, coeffs, offset, kind):
        self.indicators.append(Indicator(tuple(scope), tuple(coeffs), int(offset) % self.M, kind))

    def pin(self, key, m, kind):
        self.indicator((key,), (1,), m, kind)


def _boundary_index(theta: float, a: int, M: int) -> int:
    return (grid_index(theta, M) + (M // 2) * (1 - a) // 2) % M


def build_factor_graph(source: CircuitSpec | ExperimentSpec, params: WeightParams,
                       outcome: Sequence[int]) -> FactorGraph:
    """Factor graph of one outcome vector's trajectories.

    An ExperimentSpec of kind ghz-circuit is expanded to the standard chain
    circuit. Every setting must lie on the params.grid_size grid.
    """
    if not isinstance(params, WeightParams):
        raise SpecificationError("params must be WeightParams")
    M, L = params.grid_size, params.steps_per_segment
    circuit = None
    if isinstance(source, CircuitSpec):
        validate(source)
        circuit = source
        spec = source.to_experiment()
    else:
        spec = source
        if spec.kind is SourceKind.GHZ_CIRCUIT:
            circuit = circuit_for(spec)
    out = check_outcome(outcome, spec.outcome_length)
    for theta in spec.angles():
        grid_index(theta, M)

    b = _Builder(M)
    kind = spec.kind
    if kind is SourceKind.GHZ_CIRCUIT:
        _build_chain(b, circuit, out, L)
    elif kind is SourceKind.GHZ_SUM_ZERO:
        starts = []
        for j, (theta, a) in enumerate(zip(spec.settings, out), start=1):
            keys = b.segment(f"q{j}.0", j, 0, L)
            b.pin(keys[-1], _boundary_index(theta, a, M), "measure")
            starts.append(keys[0])
        _sum_zero_source(b, starts)
    elif kind is SourceKind.SINGLET_PAIR:
        k1 = b.segment("q1.0", 1, 0, L)
        k2 = b.segment("q2.0", 2, 0, L)
        b.indicator((k1[0], k2[0]), (-1, 1), M // 2, "singlet")
        for keys, theta, a in zip((k1, k2), spec.settings, out):
            b.pin(keys[-1], _boundary_index(theta, a, M), "measure")
    elif kind is SourceKind.SINGLE_SPIN:
        keys = b.segment("q1.0", 1, 0, L)
        b.pin(keys[0], grid_index(spec.initial_angle, M), "initial")
        b.pin(keys[-1], _boundary_index(spec.settings[0], out[0], M), "measure")
    else:
        start = None
        for k, (theta, a) in enumerate(zip(spec.sequential_settings, out)):
            keys = b.segment(f"q1.{k}", 1, 0, L, start=start)
            if start is None:
                b.pin(keys[0], grid_index(spec.initial_angle, M), "initial")
            b.pin(keys[-1], _boundary_index(theta, a, M), "measure")
            start = keys[-1]
    return FactorGraph(kind, M, params.epsilon, out, b.variables, b.segments,
                       tuple(b.steps), tuple(b.indicators))


def _build_chain(b: _Builder, circuit: CircuitSpec, out, L: int) -> None:
    M = b.M
    n = circuit.n_qubits
    thetas = circuit.settings
    length = lambda seg: circuit.segment_length(seg, L)  # noqa: E731
    first = b.segment("q1.0", 1, 0, length("q1.0"))
    b.pin(first[0], 0, "hadamard")
    pre = first[-1]
    for j in range(1, n):
        t = b.variables[pre].time + 1
        ctl = b.segment(f"q{j}.1", j, t, length(f"q{j}.1"))
        tgt = b.segment(f"q{j + 1}.0", j + 1, t, length(f"q{j + 1}.0"))
        b.indicator((tgt[0], ctl[0], pre), (1, 1, -1), 0, "cnot")
        b.pin(ctl[-1], _boundary_index(thetas[j - 1], out[j - 1], M), "measure")
        pre = tgt[-1]
    b.pin(pre, _boundary_index(thetas[n - 1], out[n - 1], M), "measure")
    assert set(b.segments) == set(segment_ids(n))


def _sum_zero_source(b: _Builder, starts: list[str]) -> None:
    if len(starts) == 1:
        b.pin(starts[0], 0, "source")
        return
    running = starts[0]
    for k in range(1, len(starts) - 1):
        r = b.var(f"src.r{k + 1}", None, 0)
        b.indicator((running, starts[k], r), (1, 1, -1), 0, "running-sum")
        running = r
    b.indicator((running, starts[-1]), (1, 1), 0, "source")


def segment_count(source: CircuitSpec | ExperimentSpec) -> int:
    """Number of free-propagation segments the engine builds for ``source``."""
    if isinstance(source, CircuitSpec):
        return len(segment_ids(source.n_qubits))
    kind = source.kind
    if kind is SourceKind.GHZ_CIRCUIT:
        return len(segment_ids(source.n_spins))
    if kind is SourceKind.SEQUENTIAL:
        return len(source.sequential_settings)
    return source.n_spins
