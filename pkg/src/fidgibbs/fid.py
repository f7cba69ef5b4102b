"""Kink-limit FID model: boundary rules, kink weight and the closed-form outcome law.

Spin directions are planar angles. A measurement of theta with outcome A pins
the final angle to theta + pi*(1 - A)/2. A kink that turns a direction by dphi
carries weight cos^2(dphi/2). With at most one kink and uniform source angles,
outcome probabilities are the normalized kink weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .angles import TWO_PI, angles_equal, grid_angle, grid_index, reduce_angle
from .errors import SpecificationError
from .experiment import ExperimentSpec, ProbabilityTable, SourceKind, check_outcome, outcome_array


@dataclass(frozen=True)
class WeightParams:
    """Finite discretization: kink scale epsilon, L steps per segment, M grid angles."""

    epsilon: float
    steps_per_segment: int
    grid_size: int

    def __post_init__(self):
        if not self.epsilon >= 0.0 or not math.isfinite(self.epsilon):
            raise SpecificationError(f"epsilon must be >= 0, got {self.epsilon!r}")
        if int(self.steps_per_segment) != self.steps_per_segment or self.steps_per_segment < 1:
            raise SpecificationError(f"need L >= 1, got {self.steps_per_segment!r}")
        if int(self.grid_size) != self.grid_size or self.grid_size < 2 or self.grid_size % 2:
            raise SpecificationError(f"M must be a positive even integer, got {self.grid_size!r}")

    @property
    def eps_lm(self) -> float:
        return self.epsilon * self.steps_per_segment * self.grid_size


@dataclass(frozen=True)
class GridAngle:
    index: int
    grid_size: int

    def __post_init__(self):
        if not 0 <= self.index < self.grid_size:
            raise SpecificationError(f"grid index {self.index} outside 0..{self.grid_size - 1}")

    @property
    def angle(self) -> float:
        return grid_angle(self.index, self.grid_size)

    @classmethod
    def of(cls, theta: float, grid_size: int) -> GridAngle:
        return cls(grid_index(theta, grid_size), grid_size)


@dataclass(frozen=True)
class KinkRecord:
    delta_phi: float
    spin_index: int
    segment_label: str

    def __post_init__(self):
        object.__setattr__(self, "delta_phi", reduce_angle(self.delta_phi))


@dataclass(frozen=True)
class GateBoundaryAngles:
    """alpha_j after the first gate on spin j, beta_j after its last gate."""

    alpha: tuple[float, ...]
    beta: tuple[float, ...]


def kink_weight(dphi):
    """cos^2(dphi/2), written as (1 + cos dphi)/2 so that dphi = pi gives exactly 0."""
    return (1.0 + np.cos(dphi)) / 2


def step_weight_table(epsilon: float, grid_size: int) -> np.ndarray:
    """w(d) for a step of d grid units: [d == 0] + epsilon * cos^2(pi*d/M)."""
    d = np.arange(grid_size)
    w = epsilon * kink_weight(TWO_PI * d / grid_size)
    w[0] += 1.0
    return w


def local_weight(dphi: float, params: WeightParams) -> float:
    """Discrete plus continuous step weight for an on-grid angle change."""
    d = grid_index(dphi, params.grid_size)
    return float(step_weight_table(params.epsilon, params.grid_size)[d])


def measurement_boundary_angle(theta: float, a: int) -> float:
    if a not in (1, -1):
        raise SpecificationError(f"outcome must be +1 or -1, got {a!r}")
    return reduce_angle(theta + math.pi * (1 - a) / 2)


def kink_phase(spec: ExperimentSpec, outcome: Sequence[int]) -> float:
    """The single kink's turn: sum_j [theta_j + (pi/2)(1 - A_j)] mod 2*pi."""
    if not spec.kind.is_ghz:
        raise SpecificationError(f"kink_phase needs a GHZ source, got {spec.kind.value}")
    out = check_outcome(outcome, spec.n_spins)
    n_minus = sum(a == -1 for a in out)
    return reduce_angle(math.fsum(spec.settings) + math.pi * n_minus)


def closed_form_distribution(spec: ExperimentSpec) -> ProbabilityTable:
    kind = spec.kind
    n = spec.outcome_length
    outs = outcome_array(n)
    if kind.is_ghz:
        n_minus = (outs == -1).sum(axis=1)
        dphi = math.fsum(spec.settings) + math.pi * n_minus
        weights = kink_weight(dphi)
    elif kind is SourceKind.SINGLET_PAIR:
        # opposite at the source; one kink on either worldline closes the gap
        t1, t2 = spec.settings
        beta1 = t1 + math.pi * (1 - outs[:, 0]) / 2
        beta2 = t2 + math.pi * (1 - outs[:, 1]) / 2
        weights = kink_weight(beta2 - beta1 - math.pi)
    elif kind is SourceKind.SINGLE_SPIN:
        beta = spec.settings[0] + math.pi * (1 - outs[:, 0]) / 2
        weights = kink_weight(beta - spec.initial_angle)
    else:
        betas = np.asarray(spec.sequential_settings)[None, :] + math.pi * (1 - outs) / 2
        prev = np.concatenate([np.full((len(outs), 1), spec.initial_angle), betas[:, :-1]], axis=1)
        weights = kink_weight(betas - prev).prod(axis=1)
    return ProbabilityTable.from_weights(n, weights)


def cnot_constraint_satisfied(alpha_in: float, beta_out: float, alpha_next: float,
                              tol: float = 1e-12) -> bool:
    """Angles after a CNOT must sum to the control's angle before it."""
    return angles_equal(alpha_next + beta_out, alpha_in, tol)


def boundary_consistency(spec: ExperimentSpec, outcome: Sequence[int],
                         tol: float = 1e-12) -> GateBoundaryAngles | None:
    """Zero-kink gate angles for this outcome, or None when a kink is unavoidable."""
    if spec.kind is not SourceKind.GHZ_CIRCUIT:
        raise SpecificationError("boundary_consistency needs a ghz-circuit source")
    out = check_outcome(outcome, spec.n_spins)
    beta = [measurement_boundary_angle(t, a) for t, a in zip(spec.settings, out)]
    alpha = [0.0]
    for j in range(spec.n_spins - 1):
        alpha.append(reduce_angle(alpha[j] - beta[j]))
    if not angles_equal(alpha[-1], beta[-1], tol):
        return None
    alpha[-1] = beta[-1]
    return GateBoundaryAngles(tuple(alpha), tuple(beta))
