import itertools
import math

import numpy as np
import pytest

from fidgibbs.circuit import ghz_circuit
from fidgibbs.errors import ResourceError, SpecificationError
from fidgibbs.experiment import ExperimentSpec, outcome_vectors
from fidgibbs.qm import (
    StateVector,
    circuit_state,
    contradiction_check,
    count_satisfying_assignments,
    ghz_probability,
    ghz_statevector_table,
    ghz_table,
    malus_probability,
    oracle_distribution,
    planar_measurement_probabilities,
    planar_spin,
    qm_distribution,
    sequential_collapse_probability,
    sequential_probability,
    singlet_probability,
    singlet_state,
    statevector_simulate,
)

PI = math.pi


@pytest.mark.parametrize("theta, outcome, expected", [
    ((0, 0, 0), (1, 1, 1), 0.25),
    ((PI / 2, PI / 2, 0), (1, 1, 1), 0.0),
    ((PI / 4, PI / 4, PI / 4), (1, 1, 1), (1 - math.sqrt(2) / 2) / 8),
])
def test_ghz_probability_examples(theta, outcome, expected):
    assert ghz_probability(ExperimentSpec.ghz(theta), outcome) == pytest.approx(expected, abs=1e-15)


def test_ghz_probability_pi_quarter_value():
    p = ghz_probability(ExperimentSpec.ghz([PI / 4] * 3), (1, 1, 1))
    assert abs(p - 0.0366117) < 1e-7


def test_ghz_probability_errors():
    spec = ExperimentSpec.ghz((0, 0, 0))
    with pytest.raises(SpecificationError):
        ghz_probability(spec, (1, 1))
    with pytest.raises(SpecificationError):
        ghz_probability(spec, (1, 0, 1))
    with pytest.raises(SpecificationError):
        ghz_probability(ExperimentSpec.singlet(0, 0), (1, 1))


def test_normalization_random(rng):
    for n in range(1, 9):
        for _ in range(1000):
            theta = rng.uniform(0, 2 * PI, n)
            assert abs(ghz_table(theta).probs.sum() - 1.0) <= 1e-12


def test_normalization_all_kinds(rng):
    for _ in range(200):
        phi0, t1, t2 = rng.uniform(0, 2 * PI, 3)
        seq = rng.uniform(0, 2 * PI, int(rng.integers(1, 5)))
        for spec in (ExperimentSpec.singlet(t1, t2), ExperimentSpec.single(phi0, t1),
                     ExperimentSpec.sequential(phi0, seq)):
            table = qm_distribution(spec)
            assert abs(table.probs.sum() - 1.0) <= 1e-12
            assert np.all(table.probs >= 0) and np.all(table.probs <= 1)


def test_permuting_settings_is_exact(rng):
    for _ in range(300):
        n = int(rng.integers(2, 7))
        theta = rng.uniform(0, 2 * PI, n)
        perm = rng.permutation(n)
        spec, spec_p = ExperimentSpec.ghz(theta), ExperimentSpec.ghz(theta[perm])
        for o in outcome_vectors(n):
            assert ghz_probability(spec, o) == ghz_probability(spec_p, o)


def test_flip_symmetry(rng):
    for _ in range(300):
        n = int(rng.integers(1, 7))
        theta = rng.uniform(0, 2 * PI, n)
        j = int(rng.integers(0, n))
        flipped = theta.copy()
        flipped[j] += PI
        for o in outcome_vectors(n):
            o2 = list(o)
            o2[j] = -o2[j]
            assert ghz_probability(ExperimentSpec.ghz(theta), o) == pytest.approx(
                ghz_probability(ExperimentSpec.ghz(flipped), o2), abs=1e-12)


def test_statevector_matches_formula(rng):
    for n in range(1, 11):
        for _ in range(5):
            theta = rng.uniform(0, 2 * PI, n)
            assert ghz_statevector_table(theta).sup_distance(ghz_table(theta)) <= 1e-12


def test_singlet_depends_on_difference_ghz2_on_sum(rng):
    for _ in range(100):
        t1, t2, shift = rng.uniform(0, 2 * PI, 3)
        for o in outcome_vectors(2):
            assert singlet_probability(t1, t2, o) == pytest.approx(
                singlet_probability(t1 + shift, t2 + shift, o), abs=1e-12)
            g = ghz_probability(ExperimentSpec.ghz((t1, t2)), o)
            assert g == pytest.approx(ghz_probability(ExperimentSpec.ghz((t1 + shift, t2 - shift)), o),
                                      abs=1e-12)
        # generic shift changes the GHZ_2 table but not the singlet one
        moved = ExperimentSpec.ghz((t1 + shift, t2 + shift))
        if abs(math.sin(shift)) > 0.1 and abs(math.sin(t1 + t2 + shift)) > 0.1:
            assert abs(ghz_probability(moved, (1, 1)) - ghz_probability(ExperimentSpec.ghz((t1, t2)), (1, 1))) > 1e-6


@pytest.mark.parametrize("t1, t2, outcome, expected", [
    (0, 0, (1, -1), 0.5),
    (0.7, 0.7, (1, 1), 0.0),
    (PI / 3, 0, (1, 1), 1 / 8),
])
def test_singlet_examples(t1, t2, outcome, expected):
    assert singlet_probability(t1, t2, outcome) == pytest.approx(expected, abs=1e-15)


def test_singlet_statevector(rng):
    for _ in range(50):
        t1, t2 = rng.uniform(0, 2 * PI, 2)
        probs = planar_measurement_probabilities(singlet_state(), (t1, t2))
        for i, o in enumerate(outcome_vectors(2)):
            assert probs[i] == pytest.approx(singlet_probability(t1, t2, o), abs=1e-12)


@pytest.mark.parametrize("phi0, theta, a, expected", [
    (0, 0, 1, 1.0), (0, PI / 3, 1, 0.75), (0, PI, -1, 1.0),
])
def test_malus_examples(phi0, theta, a, expected):
    assert malus_probability(phi0, theta, a) == pytest.approx(expected, abs=1e-15)


def test_malus_rejects_bad_outcome():
    with pytest.raises(SpecificationError):
        malus_probability(0, 0, 0)


def test_sequential_examples():
    assert sequential_probability(0, (0, 0), (1, 1)) == pytest.approx(1.0)
    assert sequential_probability(0, (PI / 2,), (1,)) == pytest.approx(0.5)
    # frozen from the collapse oracle: cos^4(pi/8)
    oracle = sequential_collapse_probability(0, (PI / 4, PI / 2), (1, 1))
    assert oracle == pytest.approx(math.cos(PI / 8) ** 4, abs=1e-12)
    assert abs(oracle - 0.7286) < 1e-4
    assert sequential_probability(0, (PI / 4, PI / 2), (1, 1)) == pytest.approx(oracle, abs=1e-12)
    with pytest.raises(SpecificationError):
        sequential_probability(0, (), ())


def test_sequential_single_step_is_malus(rng):
    for _ in range(200):
        phi0, theta = rng.uniform(0, 2 * PI, 2)
        for a in (1, -1):
            assert sequential_probability(phi0, (theta,), (a,)) == malus_probability(phi0, theta, a)


def test_sequential_matches_collapse(rng):
    for k in range(1, 5):
        for _ in range(30):
            phi0 = rng.uniform(0, 2 * PI)
            thetas = rng.uniform(0, 2 * PI, k)
            for o in outcome_vectors(k):
                assert sequential_probability(phi0, thetas, o) == pytest.approx(
                    sequential_collapse_probability(phi0, thetas, o), abs=1e-12)


def test_statevector_examples():
    one = statevector_simulate(ghz_circuit(1, [0.0]))
    assert one[(1,)] == pytest.approx(1.0, abs=1e-15)
    state = circuit_state(ghz_circuit(3))
    expected = np.zeros(8, dtype=complex)
    expected[0] = expected[7] = 1 / math.sqrt(2)
    assert np.allclose(state.amplitudes, expected, atol=1e-15)
    two = statevector_simulate(ghz_circuit(2, [PI / 2, PI / 2]))
    assert two[(1, 1)] == pytest.approx(0.0, abs=1e-15)


def test_statevector_cap():
    with pytest.raises(ResourceError):
        statevector_simulate(ghz_circuit(17))
    with pytest.raises(ResourceError):
        statevector_simulate(ghz_circuit(5), max_qubits=4)


def test_statevector_rejects_unnormalized():
    with pytest.raises(SpecificationError):
        StateVector(1, np.array([1, 1], dtype=complex))


def test_single_spin_oracle(rng):
    for _ in range(50):
        phi0, theta = rng.uniform(0, 2 * PI, 2)
        probs = planar_measurement_probabilities(StateVector(1, planar_spin(phi0)), (theta,))
        assert probs == pytest.approx([malus_probability(phi0, theta, 1),
                                       malus_probability(phi0, theta, -1)], abs=1e-12)


def test_oracle_distribution_all_kinds(rng):
    for spec in (ExperimentSpec.ghz((0.3, 1.1, 2.0)), ExperimentSpec.singlet(0.4, 2.2),
                 ExperimentSpec.single(0.1, 1.3), ExperimentSpec.sequential(0.2, (1.0, 2.5, 0.7))):
        assert oracle_distribution(spec).sup_distance(qm_distribution(spec)) <= 1e-12


def test_contradiction_report():
    r = contradiction_check()
    assert r.required_products == {"xxx": 1, "xyy": -1, "yxy": -1, "yyx": -1}
    assert r.n_assignments == 64
    assert r.satisfying_assignments == 0
    assert r.product_of_required == -1 and r.product_of_squares == 1
    assert r.contradiction


def _brute_count(constraints):
    count = 0
    for s1x, s1y, s2x, s2y, s3x, s3y in itertools.product((1, -1), repeat=6):
        s = {"1x": s1x, "1y": s1y, "2x": s2x, "2y": s2y, "3x": s3x, "3y": s3y}
        if all(s["1" + f[0]] * s["2" + f[1]] * s["3" + f[2]] == v for f, v in constraints.items()):
            count += 1
    return count


def test_dropping_one_constraint_leaves_eight():
    three = {"xxx": 1, "xyy": -1, "yxy": -1}
    assert _brute_count(three) == 8
    assert count_satisfying_assignments(three) == 8
    assert count_satisfying_assignments({}) == 64
