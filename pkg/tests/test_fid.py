import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fidgibbs.errors import GridError, InfeasibleModelError, SpecificationError
from fidgibbs.experiment import ExperimentSpec, SourceKind, outcome_vectors
from fidgibbs.fid import (
    GridAngle,
    KinkRecord,
    WeightParams,
    boundary_consistency,
    closed_form_distribution,
    cnot_constraint_satisfied,
    kink_phase,
    kink_weight,
    local_weight,
    measurement_boundary_angle,
)
from fidgibbs.qm import qm_distribution

PI = math.pi
angle = st.floats(min_value=0, max_value=2 * PI, exclude_max=True, allow_nan=False)


def test_weight_params_validation():
    assert WeightParams(1e-3, 4, 8).eps_lm == pytest.approx(0.032)
    for bad in ((-1e-3, 4, 8), (float("nan"), 4, 8), (1e-3, 0, 8), (1e-3, 4, 7), (1e-3, 4, 0)):
        with pytest.raises(SpecificationError):
            WeightParams(*bad)


def test_local_weight_examples():
    p = WeightParams(1e-3, 4, 8)
    assert local_weight(0.0, p) == pytest.approx(1.001, abs=1e-15)
    assert local_weight(PI, p) == 0.0
    assert local_weight(PI / 2, p) == pytest.approx(5e-4, abs=1e-15)
    with pytest.raises(GridError):
        local_weight(0.1, p)


def test_kink_weight_exact_zero():
    assert kink_weight(PI) == 0.0
    assert kink_weight(3 * PI) == 0.0


@pytest.mark.parametrize("theta, a, expected", [
    (PI / 4, 1, PI / 4), (PI / 4, -1, 5 * PI / 4), (3 * PI / 2, -1, PI / 2),
])
def test_measurement_boundary_angle(theta, a, expected):
    assert measurement_boundary_angle(theta, a) == pytest.approx(expected, abs=1e-15)


def test_measurement_boundary_rejects_zero():
    with pytest.raises(SpecificationError):
        measurement_boundary_angle(0.0, 0)


def test_kink_phase_examples():
    spec = ExperimentSpec.ghz([PI / 4] * 3)
    assert kink_phase(spec, (1, 1, 1)) == pytest.approx(3 * PI / 4)
    assert kink_phase(spec, (1, -1, 1)) == pytest.approx(7 * PI / 4)
    with pytest.raises(SpecificationError):
        kink_phase(ExperimentSpec.singlet(0, 0), (1, 1))


def test_closed_form_examples():
    t = closed_form_distribution(ExperimentSpec.ghz((0, 0, 0)))
    for o, p in t.items():
        assert p == pytest.approx(0.25 if math.prod(o) == 1 else 0.0, abs=1e-15)
    t = closed_form_distribution(ExperimentSpec.ghz([PI / 4] * 3))
    assert t[(1, 1, 1)] == pytest.approx((1 - math.sqrt(2) / 2) / 8, abs=1e-15)
    t = closed_form_distribution(ExperimentSpec.ghz([PI / 5] * 5))
    for o, p in t.items():
        assert p == pytest.approx(1 / 16 if math.prod(o) == -1 else 0.0, abs=1e-15)


def _random_spec(rng, kind, n):
    if kind.is_ghz:
        theta = rng.uniform(0, 2 * PI, n)
        if kind is SourceKind.GHZ_SUM_ZERO:
            return ExperimentSpec.ghz(theta, SourceKind.GHZ_SUM_ZERO)
        return ExperimentSpec.ghz(theta)
    if kind is SourceKind.SINGLET_PAIR:
        return ExperimentSpec.singlet(*rng.uniform(0, 2 * PI, 2))
    if kind is SourceKind.SINGLE_SPIN:
        return ExperimentSpec.single(*rng.uniform(0, 2 * PI, 2))
    return ExperimentSpec.sequential(rng.uniform(0, 2 * PI), rng.uniform(0, 2 * PI, n))


@pytest.mark.parametrize("kind", list(SourceKind))
def test_closed_form_equals_qm(kind, rng):
    for n in range(1, 9):
        if kind in (SourceKind.SINGLET_PAIR, SourceKind.SINGLE_SPIN) and n > 1:
            break
        if kind is SourceKind.SEQUENTIAL and n > 5:
            break
        for _ in range(100):
            spec = _random_spec(rng, kind, n)
            assert closed_form_distribution(spec).sup_distance(qm_distribution(spec)) <= 1e-12


@settings(max_examples=300)
@given(st.lists(angle, min_size=1, max_size=8))
def test_normalization_sum_is_power_of_two(theta):
    table = closed_form_distribution(ExperimentSpec.ghz(theta))
    assert table.normalization_sum == pytest.approx(2 ** (len(theta) - 1), rel=1e-12)


@settings(max_examples=300)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=6), st.data())
def test_zero_kink_iff_deterministic(indices, data):
    # on the M = 4 grid the total phase is often a multiple of pi
    theta = [m * PI / 2 for m in indices]
    spec = ExperimentSpec.ghz(theta)
    n = len(theta)
    outcome = data.draw(st.sampled_from(list(outcome_vectors(n))))
    feasible = boundary_consistency(spec, outcome) is not None
    p = closed_form_distribution(spec)[outcome]
    total = sum(indices)
    deterministic = total % 2 == 0
    assert feasible == (abs(p - 2.0 ** (1 - n)) <= 1e-12 and deterministic)
    if deterministic:
        assert p == pytest.approx(2.0 ** (1 - n), abs=1e-12) or p == 0.0


def test_degenerate_phase_only_dependence(rng):
    for n in range(3, 6):
        for _ in range(50):
            a = rng.uniform(0, 2 * PI, n)
            shift = rng.uniform(-1, 1, n)
            shift -= shift.mean()
            b = a + shift
            ta = closed_form_distribution(ExperimentSpec.ghz(a))
            tb = closed_form_distribution(ExperimentSpec.ghz(b))
            assert ta.sup_distance(tb) <= 1e-12


def test_cnot_examples():
    assert cnot_constraint_satisfied(0.0, PI / 4, 7 * PI / 4)
    assert cnot_constraint_satisfied(PI / 2, PI, 3 * PI / 2)
    assert not cnot_constraint_satisfied(0.0, PI / 4, PI / 4)


def test_boundary_consistency_examples():
    spec = ExperimentSpec.ghz((0, 0, 0))
    got = boundary_consistency(spec, (1, 1, 1))
    assert got.alpha == (0.0, 0.0, 0.0) and got.beta == (0.0, 0.0, 0.0)
    for j in range(2):
        assert cnot_constraint_satisfied(got.alpha[j], got.beta[j], got.alpha[j + 1])
    assert boundary_consistency(spec, (1, 1, -1)) is None
    got = boundary_consistency(spec, (-1, -1, 1))
    assert got is not None
    with pytest.raises(SpecificationError):
        boundary_consistency(ExperimentSpec.ghz((0, 0), SourceKind.GHZ_SUM_ZERO), (1, 1))


def test_infeasible_table_raises():
    with pytest.raises(InfeasibleModelError):
        from fidgibbs.experiment import ProbabilityTable
        ProbabilityTable.from_weights(1, np.zeros(2))


def test_grid_angle_and_kink_record():
    g = GridAngle.of(3 * PI / 4, 8)
    assert g.index == 3 and g.angle == pytest.approx(3 * PI / 4)
    with pytest.raises(SpecificationError):
        GridAngle(8, 8)
    assert KinkRecord(-PI / 2, 1, "q1.0").delta_phi == pytest.approx(3 * PI / 2)
