"""Named experiments, comparison reports and their CSV/JSON persistence."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .angles import format_angle
from .circuit import CircuitSpec
from .engine import (
    Census,
    build_factor_graph,
    census,
    exact_sample,
    leading_order_kink_counts,
    outcome_distribution,
    segment_count,
)
from .errors import SpecificationError
from .experiment import ExperimentSpec, ProbabilityTable, encode_outcome, outcome_vectors
from .fid import WeightParams, closed_form_distribution
from .qm import ContradictionReport, contradiction_check, oracle_distribution, qm_distribution

SCHEMA_VERSION = 1


def _num(x: float) -> str:
    return format(float(x), ".16e")


def as_experiment(source: CircuitSpec | ExperimentSpec) -> ExperimentSpec:
    return source.to_experiment() if isinstance(source, CircuitSpec) else source


def describe_source(source) -> dict:
    spec = as_experiment(source)
    d = {"source": spec.kind.value, "n_spins": spec.n_spins,
         "settings": [format_angle(t) for t in spec.measurement_angles]}
    if spec.initial_angle is not None:
        d["initial_angle"] = format_angle(spec.initial_angle)
    if isinstance(source, CircuitSpec) and source.segment_lengths:
        d["segment_lengths"] = dict(sorted(source.segment_lengths.items()))
    return d


def describe_params(params: WeightParams | None) -> dict:
    if params is None:
        return {}
    return {"epsilon": params.epsilon, "L": params.steps_per_segment, "M": params.grid_size}


@dataclass
class ComparisonReport:
    rows: list[tuple[tuple[int, ...], float, float, float]]
    sup_norm: float
    params: dict
    fid_source: str
    wall_time: float = 0.0

    kind = "comparison"
    header = ("outcome", "p_qm", "p_fid", "abs_diff")

    @classmethod
    def from_tables(cls, qm: ProbabilityTable, fid: ProbabilityTable, params: dict,
                    fid_source: str, wall_time: float = 0.0) -> ComparisonReport:
        rows = [(o, float(q), float(f), abs(float(q) - float(f)))
                for o, q, f in zip(qm.outcomes, qm.probs, fid.probs)]
        return cls(rows, max(r[3] for r in rows), params, fid_source, wall_time)

    def csv_rows(self):
        for o, q, f, d in self.rows:
            yield encode_outcome(o), _num(q), _num(f), _num(d)

    def payload(self) -> dict:
        return {
            "v": SCHEMA_VERSION, "kind": self.kind, "params": self.params,
            "fid_source": self.fid_source,
            "rows": [{"outcome": encode_outcome(o), "p_qm": q, "p_fid": f, "abs_diff": d}
                     for o, q, f, d in self.rows],
            "sup_norm": self.sup_norm, "wall_time": self.wall_time,
        }


def compare(source: CircuitSpec | ExperimentSpec, params: WeightParams | None = None,
            method: str = "closed-form") -> ComparisonReport:
    """Join the QM table with a FID table outcome by outcome.

    ``method`` picks the FID side: ``closed-form``, ``eliminate`` or ``brute``
    (the last two need ``params``), or ``qm-oracle`` for the statevector check.
    """
    start = time.perf_counter()
    spec = as_experiment(source)
    qm = qm_distribution(spec)
    if method == "closed-form":
        fid = closed_form_distribution(spec)
    elif method == "qm-oracle":
        fid = oracle_distribution(spec)
    elif method in ("eliminate", "brute"):
        if params is None:
            raise SpecificationError("engine comparison needs weight parameters")
        fid = outcome_distribution(source, params, method=method)
    else:
        raise SpecificationError(f"unknown comparison method {method!r}")
    info = describe_source(source) | describe_params(params if method in ("eliminate", "brute") else None)
    info["method"] = method
    return ComparisonReport.from_tables(qm, fid, info, method, time.perf_counter() - start)


@dataclass
class ConvergenceReport:
    rows: list[tuple[float, float, float, float]]  # epsilon, sup_norm, eps*L*M, bound
    params: dict
    wall_time: float = 0.0

    kind = "convergence"
    header = ("epsilon", "sup_norm", "eps_LM", "bound")

    @property
    def strictly_decreasing(self) -> bool:
        errs = [r[1] for r in self.rows]
        return all(a > b for a, b in zip(errs, errs[1:]))

    @property
    def within_bound(self) -> bool:
        return all(r[1] <= r[3] for r in self.rows)

    def csv_rows(self):
        for row in self.rows:
            yield tuple(_num(x) for x in row)

    def payload(self) -> dict:
        return {
            "v": SCHEMA_VERSION, "kind": self.kind, "params": self.params,
            "rows": [dict(zip(self.header, r)) for r in self.rows],
            "strictly_decreasing": self.strictly_decreasing, "within_bound": self.within_bound,
            "wall_time": self.wall_time,
        }


def converge(source, epsilons: Sequence[float], L: int, M: int,
             constant: float = 10.0) -> ConvergenceReport:
    """Sup-norm error of the engine against QM for each epsilon, with the C*eps*L*M*S bound."""
    start = time.perf_counter()
    qm = qm_distribution(as_experiment(source))
    n_seg = segment_count(source)
    rows = []
    for eps in epsilons:
        params = WeightParams(eps, L, M)
        err = outcome_distribution(source, params).sup_distance(qm)
        rows.append((eps, err, params.eps_lm, constant * params.eps_lm * n_seg))
    info = describe_source(source) | {"L": L, "M": M, "segments": n_seg, "constant": constant}
    return ConvergenceReport(rows, info, time.perf_counter() - start)


@dataclass
class CensusReport:
    census: Census
    params: dict
    reference: dict

    kind = "census"
    header = ("kinks", "count", "total_weight")

    def csv_rows(self):
        for k, (count, weight) in sorted(self.census.by_kink_count.items()):
            yield str(k), str(count), _num(weight)

    def payload(self) -> dict:
        return {
            "v": SCHEMA_VERSION, "kind": self.kind, "params": self.params,
            "rows": [{"kinks": k, "count": c, "total_weight": w}
                     for k, (c, w) in sorted(self.census.by_kink_count.items())],
            "beyond": {"count": self.census.beyond[0], "total_weight": self.census.beyond[1]},
            "leading_order_counts": self.reference,
        }


def run_census(source, params: WeightParams, max_kinks: int = 2,
               outcome: Sequence[int] | None = None) -> CensusReport:
    """Census of one outcome's graph, or pooled over every outcome."""
    spec = as_experiment(source)
    outcomes = [tuple(outcome)] if outcome is not None else outcome_vectors(spec.outcome_length)
    total = Census()
    for o in outcomes:
        total = total + census(build_factor_graph(source, params, o), max_kinks)
    info = describe_source(source) | describe_params(params) | {
        "outcome": encode_outcome(outcome) if outcome is not None else "pooled"}
    return CensusReport(total, info,
                        leading_order_kink_counts(params.steps_per_segment, params.grid_size))


@dataclass
class SampleReport:
    outcome_counts: dict[tuple[int, ...], int]
    probabilities: dict[tuple[int, ...], float]
    n_samples: int
    seed: int
    chi2: float
    p_value: float
    params: dict
    trajectories: list = field(default_factory=list)

    kind = "sample"
    header = ("outcome", "count", "p_fid")

    def csv_rows(self):
        for o, c in self.outcome_counts.items():
            yield encode_outcome(o), str(c), _num(self.probabilities[o])

    def payload(self) -> dict:
        return {
            "v": SCHEMA_VERSION, "kind": self.kind, "params": self.params,
            "seed": self.seed, "n_samples": self.n_samples,
            "rows": [{"outcome": encode_outcome(o), "count": c, "p_fid": self.probabilities[o]}
                     for o, c in self.outcome_counts.items()],
            "chi2": self.chi2, "p_value": self.p_value,
        }


def chi_square(counts: dict, probs: dict) -> tuple[float, float]:
    """Pearson statistic over outcomes of positive probability; inf if a zero-probability one occurs."""
    observed, expected = [], []
    n = sum(counts.values())
    for o, c in counts.items():
        p = probs[o]
        if p > 0.0:
            observed.append(c)
            expected.append(n * p)
        elif c:
            return math.inf, 0.0
    if len(observed) < 2:
        return 0.0, 1.0
    expected = np.array(expected)
    expected *= n / expected.sum()
    res = stats.chisquare(observed, expected)
    return float(res.statistic), float(res.pvalue)


def run_sample(source, params: WeightParams, seed: int, n: int,
               n_trajectories: int = 0) -> tuple[SampleReport, object]:
    batch = exact_sample(source, params, seed, n, n_trajectories)
    table = outcome_distribution(source, params)
    probs = table.as_dict()
    chi2, p = chi_square(batch.outcome_counts, probs)
    info = describe_source(source) | describe_params(params)
    return SampleReport(batch.outcome_counts, probs, n, seed, chi2, p, info), batch


def trajectory_rows(source, params: WeightParams, batch):
    """Rows ``sample,outcome,variable,spin,time,segment,m,phi`` for retained trajectories."""
    yield ("sample", "outcome", "variable", "spin", "time", "segment", "m", "phi")
    graphs = {}
    for i, (traj, o) in enumerate(zip(batch.trajectories, batch.trajectory_outcomes)):
        g = graphs.get(o) or graphs.setdefault(o, build_factor_graph(source, params, o))
        for key, var in g.variables.items():
            m = traj[key]
            yield (str(i), encode_outcome(o), key, "" if var.spin is None else str(var.spin),
                   str(var.time), var.segment or "", str(m), _num(2 * math.pi * m / params.grid_size))


@dataclass
class ContradictionSummary:
    report: ContradictionReport

    kind = "contradiction"
    header = ("item", "value")

    def csv_rows(self):
        r = self.report
        for fam, prod in r.required_products.items():
            yield f"product_{fam}", str(prod)
        yield "n_assignments", str(r.n_assignments)
        yield "satisfying_assignments", str(r.satisfying_assignments)
        yield "product_of_required", str(r.product_of_required)
        yield "product_of_squares", str(r.product_of_squares)
        yield "contradiction", str(r.contradiction).lower()

    def payload(self) -> dict:
        r = self.report
        return {"v": SCHEMA_VERSION, "kind": self.kind,
                "required_products": r.required_products, "n_assignments": r.n_assignments,
                "satisfying_assignments": r.satisfying_assignments,
                "product_of_required": r.product_of_required,
                "product_of_squares": r.product_of_squares,
                "contradiction": r.contradiction}


def run_contradiction() -> ContradictionSummary:
    return ContradictionSummary(contradiction_check())


def render(report, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(report.header)
        writer.writerows(report.csv_rows())
        return buf.getvalue()
    if fmt == "json":
        return json.dumps(report.payload(), indent=2) + "\n"
    raise SpecificationError(f"unsupported format {fmt!r}")


def emit(report, fmt: str, path: str | Path | None = None) -> str:
    """Render a report; write it to ``path`` when given. Returns the text."""
    text = render(report, fmt)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def write_rows(rows, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
