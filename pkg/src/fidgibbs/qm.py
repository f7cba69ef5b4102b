"""Exact quantum-mechanical reference probabilities.

Closed formulas for the GHZ_N, singlet, single-spin and sequential setups, a
small statevector simulator for the chain circuit (the brute-force oracle), a
projective-collapse oracle for sequential runs, and the GHZ contradiction
checker. Planar measurement along theta has eigenvectors (1, A*exp(i*theta))/sqrt(2).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import CircuitSpec, Cnot, Hadamard, Measure, ghz_circuit
from .errors import ResourceError, SpecificationError
from .experiment import (
    ExperimentSpec,
    ProbabilityTable,
    SourceKind,
    check_outcome,
    outcome_array,
)

DEFAULT_MAX_QUBITS = 16


def _require_pm1(a) -> int:
    if a not in (1, -1):
        raise SpecificationError(f"outcome must be +1 or -1, got {a!r}")
    return int(a)


def ghz_probability(spec: ExperimentSpec, outcome: Sequence[int]) -> float:
    """2**-N * (1 + prod(A) * cos(sum(theta)))."""
    if not spec.kind.is_ghz:
        raise SpecificationError(f"ghz_probability needs a GHZ source, got {spec.kind.value}")
    out = check_outcome(outcome, spec.n_spins)
    sign = math.prod(out)
    return (1.0 + sign * math.cos(math.fsum(spec.settings))) / 2 ** spec.n_spins


def ghz_table(settings: Sequence[float]) -> ProbabilityTable:
    n = len(settings)
    signs = outcome_array(n).prod(axis=1)
    probs = (1.0 + signs * math.cos(math.fsum(settings))) / 2 ** n
    return ProbabilityTable(n, probs, math.fsum(probs))


def singlet_probability(theta1: float, theta2: float, outcome: Sequence[int]) -> float:
    a1, a2 = check_outcome(outcome, 2)
    return 0.25 * (1.0 - a1 * a2 * math.cos(theta1 - theta2))


def malus_probability(phi0: float, theta: float, a: int) -> float:
    a = _require_pm1(a)
    dphi = theta - phi0 + math.pi * (1 - a) / 2
    return (1.0 + math.cos(dphi)) / 2


def sequential_probability(phi0: float, thetas: Sequence[float], outcomes: Sequence[int]) -> float:
    """Product of Malus factors between successive boundary angles."""
    if len(thetas) == 0:
        raise SpecificationError("sequential run needs at least one measurement")
    outs = check_outcome(outcomes, len(thetas))
    p = 1.0
    prev = phi0
    for theta, a in zip(thetas, outs):
        p *= malus_probability(prev, theta, a)
        prev = theta + math.pi * (1 - a) / 2
    return p


def qm_distribution(spec: ExperimentSpec) -> ProbabilityTable:
    """Quantum prediction for every outcome of ``spec``."""
    kind = spec.kind
    if kind.is_ghz:
        return ghz_table(spec.settings)
    n = spec.outcome_length
    outs = outcome_array(n)
    if kind is SourceKind.SINGLET_PAIR:
        t1, t2 = spec.settings
        probs = 0.25 * (1.0 - outs[:, 0] * outs[:, 1] * math.cos(t1 - t2))
    elif kind is SourceKind.SINGLE_SPIN:
        probs = [malus_probability(spec.initial_angle, spec.settings[0], int(a)) for a in outs[:, 0]]
    else:
        probs = [sequential_probability(spec.initial_angle, spec.sequential_settings, o)
                 for o in outs.tolist()]
    probs = np.asarray(probs, dtype=float)
    return ProbabilityTable(n, probs, math.fsum(probs))


# --- statevector oracle -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StateVector:
    """2**N amplitudes, z-basis, spin 1 most significant (index bit 0 = up)."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2 ** self.n_qubits,):
            raise SpecificationError("amplitude count does not match qubit count")
        if abs(np.vdot(amps, amps).real - 1.0) > 1e-12:
            raise SpecificationError("state is not normalized")
        object.__setattr__(self, "amplitudes", amps)


_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def _apply_1q(psi: np.ndarray, u: np.ndarray, q: int) -> np.ndarray:
    psi = np.moveaxis(psi, q, 0)
    psi = np.tensordot(u, psi, axes=([1], [0]))
    return np.moveaxis(psi, 0, q)


def _apply_cnot(psi: np.ndarray, control: int, target: int) -> np.ndarray:
    psi = psi.copy()
    sel = [slice(None)] * psi.ndim
    sel[control] = 1
    sub = psi[tuple(sel)]
    t = target if target < control else target - 1
    psi[tuple(sel)] = np.flip(sub, axis=t)
    return psi


def _check_size(n: int, max_qubits: int) -> None:
    if n > max_qubits:
        raise ResourceError(f"{n} qubits exceeds the statevector cap of {max_qubits}")


def circuit_state(circuit: CircuitSpec, max_qubits: int = DEFAULT_MAX_QUBITS) -> StateVector:
    """Pre-measurement state: every unitary gate applied to |up...up>."""
    n = circuit.n_qubits
    _check_size(n, max_qubits)
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1.0
    for g in circuit.gates:
        if isinstance(g, Hadamard):
            psi = _apply_1q(psi, _H, g.qubit - 1)
        elif isinstance(g, Cnot):
            psi = _apply_cnot(psi, g.control - 1, g.target - 1)
    return StateVector(n, psi.reshape(-1))


def planar_measurement_probabilities(state: StateVector, thetas: Sequence[float]) -> np.ndarray:
    """Born probabilities of all 2**N planar outcome vectors, canonical order."""
    n = state.n_qubits
    if len(thetas) != n:
        raise SpecificationError("need one measurement angle per qubit")
    psi = state.amplitudes.reshape((2,) * n)
    for q, theta in enumerate(thetas):
        # rows are <e_+| and <e_-| for the eigenbasis of the theta component
        u = np.array([[1, np.exp(-1j * theta)], [1, -np.exp(-1j * theta)]]) / math.sqrt(2)
        psi = _apply_1q(psi, u, q)
    return np.abs(psi.reshape(-1)) ** 2


def statevector_simulate(circuit: CircuitSpec, max_qubits: int = DEFAULT_MAX_QUBITS) -> ProbabilityTable:
    state = circuit_state(circuit, max_qubits)
    thetas = {g.qubit: g.theta for g in circuit.gates if isinstance(g, Measure)}
    probs = planar_measurement_probabilities(state, [thetas[j] for j in range(1, circuit.n_qubits + 1)])
    return ProbabilityTable(circuit.n_qubits, probs, math.fsum(probs))


def ghz_statevector_table(settings: Sequence[float], max_qubits: int = DEFAULT_MAX_QUBITS) -> ProbabilityTable:
    return statevector_simulate(ghz_circuit(len(settings), settings), max_qubits)


def singlet_state() -> StateVector:
    return StateVector(2, np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2))


def planar_spin(phi: float) -> np.ndarray:
    return np.array([1, np.exp(1j * phi)], dtype=complex) / math.sqrt(2)


def sequential_collapse_probability(phi0: float, thetas: Sequence[float],
                                    outcomes: Sequence[int]) -> float:
    """Joint probability of a measurement record by repeated projection and renormalization."""
    if len(thetas) == 0:
        raise SpecificationError("sequential run needs at least one measurement")
    outs = check_outcome(outcomes, len(thetas))
    psi = planar_spin(phi0)
    p = 1.0
    for theta, a in zip(thetas, outs):
        e = np.array([1, a * np.exp(1j * theta)], dtype=complex) / math.sqrt(2)
        amp = np.vdot(e, psi)
        pk = abs(amp) ** 2
        p *= pk
        if pk == 0.0:
            return 0.0
        psi = e * (amp / abs(amp))
    return float(p)


# --- GHZ contradiction ----------------------------------------------------------

SETTING_FAMILIES = {
    "xxx": (0.0, 0.0, 0.0),
    "xyy": (0.0, math.pi / 2, math.pi / 2),
    "yxy": (math.pi / 2, 0.0, math.pi / 2),
    "yyx": (math.pi / 2, math.pi / 2, 0.0),
}


@dataclass(frozen=True)
class ContradictionReport:
    required_products: dict[str, int]
    n_assignments: int
    satisfying_assignments: int
    product_of_required: int
    product_of_squares: int

    @property
    def contradiction(self) -> bool:
        return self.satisfying_assignments == 0 and self.product_of_required != self.product_of_squares


def deterministic_product(settings: Sequence[float], tol: float = 1e-12) -> int | None:
    """The certain value of prod(A_j) under these settings, or None if it is uncertain."""
    spec = ExperimentSpec.ghz(settings)
    p_plus = math.fsum(ghz_probability(spec, o) for o in outcome_array(len(settings)).tolist()
                       if math.prod(o) == 1)
    if abs(p_plus - 1.0) <= tol:
        return 1
    if abs(p_plus) <= tol:
        return -1
    return None


def preassigned_tables():
    """All 64 tables mapping (spin j, axis) to a predetermined +/-1 value."""
    for values in itertools.product((1, -1), repeat=6):
        yield {(j + 1, axis): values[2 * j + k] for j in range(3) for k, axis in enumerate("xy")}


def family_product(table: dict, family: str) -> int:
    return math.prod(table[(j + 1, axis)] for j, axis in enumerate(family))


def count_satisfying_assignments(constraints: dict[str, int]) -> int:
    """Count preassigned tables meeting every family's product constraint."""
    return sum(
        all(family_product(t, fam) == want for fam, want in constraints.items())
        for t in preassigned_tables()
    )


def contradiction_check() -> ContradictionReport:
    required = {}
    for fam, settings in SETTING_FAMILIES.items():
        prod = deterministic_product(settings)
        if prod is None:
            raise AssertionError(f"family {fam} is not deterministic")
        required[fam] = prod
    return ContradictionReport(
        required_products=required,
        n_assignments=2 ** 6,
        satisfying_assignments=count_satisfying_assignments(required),
        product_of_required=math.prod(required.values()),
        product_of_squares=_product_over_families(required),
    )


def _product_over_families(families) -> int:
    """prod over families of prod_j s, which is the same for every table."""
    values = {math.prod(family_product(t, fam) for fam in families) for t in preassigned_tables()}
    if len(values) != 1:
        raise AssertionError("family product depends on the assignment")
    return values.pop()


def oracle_distribution(spec: ExperimentSpec, max_qubits: int = DEFAULT_MAX_QUBITS) -> ProbabilityTable:
    """QM table from state vectors and projections rather than closed formulas."""
    kind = spec.kind
    if kind.is_ghz:
        return ghz_statevector_table(spec.settings, max_qubits)
    if kind is SourceKind.SINGLET_PAIR:
        probs = planar_measurement_probabilities(singlet_state(), spec.settings)
    elif kind is SourceKind.SINGLE_SPIN:
        probs = planar_measurement_probabilities(StateVector(1, planar_spin(spec.initial_angle)),
                                                 spec.settings)
    else:
        probs = np.array([sequential_collapse_probability(spec.initial_angle,
                                                          spec.sequential_settings, o)
                          for o in outcome_array(spec.outcome_length).tolist()])
    return ProbabilityTable(spec.outcome_length, probs, math.fsum(probs))
