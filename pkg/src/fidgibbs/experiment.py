"""Experiment descriptions, outcome vectors and probability tables.

Outcome vectors are tuples of +1/-1. Tables list all 2**N outcomes in a fixed
order: lexicographic with +1 before -1 and spin 1 most significant, which is
the same order as the z-basis labels of the statevector oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Sequence

import numpy as np

from .angles import reduce_angle
from .errors import InfeasibleModelError, SpecificationError


class SourceKind(str, Enum):
    GHZ_CIRCUIT = "ghz-circuit"
    GHZ_SUM_ZERO = "ghz-sum-zero"
    SINGLET_PAIR = "singlet-pair"
    SINGLE_SPIN = "single-spin"
    SEQUENTIAL = "sequential"

    @property
    def is_ghz(self) -> bool:
        return self in (SourceKind.GHZ_CIRCUIT, SourceKind.GHZ_SUM_ZERO)


@dataclass(frozen=True)
class ExperimentSpec:
    """A preparation plus planar measurement settings.

    ``settings`` holds one angle per spin; the sequential kind instead keeps its
    K successive settings in ``sequential_settings`` and leaves ``settings``
    empty. All angles are stored reduced to [0, 2*pi).
    """

    kind: SourceKind
    n_spins: int
    settings: tuple[float, ...] = ()
    initial_angle: float | None = None
    sequential_settings: tuple[float, ...] | None = None

    def __post_init__(self):
        kind = SourceKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not isinstance(self.n_spins, (int, np.integer)) or self.n_spins < 1:
            raise SpecificationError(f"n_spins must be a positive integer, got {self.n_spins!r}")
        settings = tuple(reduce_angle(float(t)) for t in self.settings)
        object.__setattr__(self, "settings", settings)
        if self.initial_angle is not None:
            object.__setattr__(self, "initial_angle", reduce_angle(float(self.initial_angle)))
        if self.sequential_settings is not None:
            seq = tuple(reduce_angle(float(t)) for t in self.sequential_settings)
            object.__setattr__(self, "sequential_settings", seq)

        if kind.is_ghz:
            if len(settings) != self.n_spins:
                raise SpecificationError(
                    f"{kind.value} needs {self.n_spins} settings, got {len(settings)}"
                )
        elif kind is SourceKind.SINGLET_PAIR:
            if self.n_spins != 2 or len(settings) != 2:
                raise SpecificationError("singlet-pair needs N=2 and two settings")
        elif kind is SourceKind.SINGLE_SPIN:
            if self.n_spins != 1 or len(settings) != 1:
                raise SpecificationError("single-spin needs N=1 and one setting")
            if self.initial_angle is None:
                raise SpecificationError("single-spin needs an initial angle")
        elif kind is SourceKind.SEQUENTIAL:
            if self.n_spins != 1:
                raise SpecificationError("sequential needs N=1")
            if self.initial_angle is None:
                raise SpecificationError("sequential needs an initial angle")
            if not self.sequential_settings:
                raise SpecificationError("sequential needs at least one setting")
            if settings:
                raise SpecificationError("sequential keeps its angles in sequential_settings")

    @classmethod
    def ghz(cls, settings: Sequence[float], kind=SourceKind.GHZ_CIRCUIT) -> ExperimentSpec:
        return cls(SourceKind(kind), len(settings), tuple(settings))

    @classmethod
    def singlet(cls, theta1: float, theta2: float) -> ExperimentSpec:
        return cls(SourceKind.SINGLET_PAIR, 2, (theta1, theta2))

    @classmethod
    def single(cls, phi0: float, theta: float) -> ExperimentSpec:
        return cls(SourceKind.SINGLE_SPIN, 1, (theta,), initial_angle=phi0)

    @classmethod
    def sequential(cls, phi0: float, thetas: Sequence[float]) -> ExperimentSpec:
        return cls(SourceKind.SEQUENTIAL, 1, (), initial_angle=phi0,
                   sequential_settings=tuple(thetas))

    @property
    def outcome_length(self) -> int:
        if self.kind is SourceKind.SEQUENTIAL:
            return len(self.sequential_settings)
        return self.n_spins

    @property
    def measurement_angles(self) -> tuple[float, ...]:
        if self.kind is SourceKind.SEQUENTIAL:
            return self.sequential_settings
        return self.settings

    def angles(self) -> tuple[float, ...]:
        """Every angle an engine run must place on the grid."""
        extra = () if self.initial_angle is None else (self.initial_angle,)
        return extra + self.measurement_angles


def check_outcome(outcome: Sequence[int], length: int) -> tuple[int, ...]:
    out = tuple(int(a) for a in outcome)
    if len(out) != length:
        raise SpecificationError(f"outcome length {len(out)} does not match {length}")
    for a, raw in zip(out, outcome):
        if a not in (1, -1) or a != raw:
            raise SpecificationError(f"outcome entries must be +1 or -1, got {raw!r}")
    return out


def outcome_vectors(n: int) -> list[tuple[int, ...]]:
    """All 2**n outcome vectors in canonical table order."""
    return list(itertools.product((1, -1), repeat=n))


def outcome_array(n: int) -> np.ndarray:
    """Canonical outcomes as a (2**n, n) integer array of +/-1."""
    idx = np.arange(2 ** n)[:, None]
    bits = (idx >> np.arange(n - 1, -1, -1)[None, :]) & 1
    return 1 - 2 * bits


def outcome_index(outcome: Sequence[int]) -> int:
    idx = 0
    for a in outcome:
        idx = 2 * idx + (1 if a == -1 else 0)
    return idx


def encode_outcome(outcome: Sequence[int]) -> str:
    return "".join("+" if a == 1 else "-" for a in outcome)


def decode_outcome(text: str) -> tuple[int, ...]:
    if not text or set(text) - {"+", "-"}:
        raise SpecificationError(f"bad outcome string {text!r}")
    return tuple(1 if c == "+" else -1 for c in text)


@dataclass(frozen=True, eq=False)
class ProbabilityTable:
    """Probabilities of every outcome vector, in canonical order."""

    n: int
    probs: np.ndarray
    normalization_sum: float = 1.0
    outcomes: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (2 ** self.n,):
            raise SpecificationError(f"expected {2 ** self.n} probabilities, got {probs.shape}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "outcomes", tuple(outcome_vectors(self.n)))

    @classmethod
    def from_weights(cls, n: int, weights) -> ProbabilityTable:
        weights = np.asarray(weights, dtype=float)
        total = math.fsum(weights)
        if not total > 0.0:
            raise InfeasibleModelError("all outcomes have zero weight")
        return cls(n, weights / total, total)

    def __getitem__(self, outcome: Sequence[int]) -> float:
        return float(self.probs[outcome_index(check_outcome(outcome, self.n))])

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return iter(self.outcomes)

    def __len__(self) -> int:
        return len(self.outcomes)

    def items(self):
        return zip(self.outcomes, (float(p) for p in self.probs))

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return dict(self.items())

    def sup_distance(self, other: ProbabilityTable) -> float:
        if other.n != self.n:
            raise SpecificationError("tables have different outcome lengths")
        return float(np.max(np.abs(self.probs - other.probs)))
