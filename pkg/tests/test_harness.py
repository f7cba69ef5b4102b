import csv
import io
import json
import math
import subprocess
import sys

import pytest

from fidgibbs import cli
from fidgibbs.circuit import ghz_circuit, serialize
from fidgibbs.experiment import ExperimentSpec, decode_outcome, encode_outcome
from fidgibbs.fid import WeightParams
from fidgibbs.harness import ComparisonReport, compare, converge, emit, render, run_sample
from fidgibbs.qm import ghz_table

PI = math.pi


@pytest.fixture(autouse=True)
def _no_thread_env(monkeypatch):
    monkeypatch.delenv("FIDGIBBS_THREADS", raising=False)


def run_cli(capsys, *args):
    code = cli.main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_outcome_encoding():
    assert encode_outcome((1, -1, 1)) == "+-+"
    assert decode_outcome("+-+") == (1, -1, 1)
    with pytest.raises(ValueError):
        decode_outcome("+x")


def test_qm_example(capsys):
    code, out, _ = run_cli(capsys, "qm", "--ghz", "3", "--theta", "0,0,0")
    assert code == 0
    table = rows(out)
    assert len(out.splitlines()) == 9
    assert table[0] == ["outcome", "p_qm", "p_fid", "abs_diff"]
    for outcome, p_qm, p_fid, diff in table[1:]:
        even = decode_outcome(outcome).count(-1) % 2 == 0
        assert float(p_qm) == pytest.approx(0.25 if even else 0.0, abs=1e-15)
        assert float(diff) <= 1e-12


def test_closed_form_compare(rng):
    for _ in range(20):
        theta = [m * PI / 4 for m in rng.integers(0, 8, 4)]
        assert compare(ExperimentSpec.ghz(theta)).sup_norm <= 1e-12


def test_identical_tables_compare_zero():
    t = ghz_table([0.3, 1.2])
    report = ComparisonReport.from_tables(t, t, {}, "self")
    assert report.sup_norm == 0.0


def test_engine_compare_within_bound():
    spec = ExperimentSpec.ghz([PI / 4] * 3)
    p = WeightParams(1e-5, 4, 8)
    report = compare(spec, p, method="eliminate")
    assert report.sup_norm <= 5 * p.eps_lm * 5


def test_json_round_trip(tmp_path):
    report = compare(ExperimentSpec.ghz([PI / 4, PI / 2, 0.3]))
    path = tmp_path / "r.json"
    emit(report, "json", path)
    data = json.loads(path.read_text())
    assert data["v"] == 1 and "wall_time" in data
    for row, (o, q, f, d) in zip(data["rows"], report.rows):
        assert row["outcome"] == encode_outcome(o)
        assert row["p_qm"] == q and row["p_fid"] == f and row["abs_diff"] == d
    assert data["sup_norm"] == report.sup_norm


def test_csv_numbers_round_trip():
    report = compare(ExperimentSpec.ghz([PI / 4, PI / 2, 0.3]))
    for (o, q, f, d), line in zip(report.rows, rows(render(report, "csv"))[1:]):
        assert float(line[1]) == q and float(line[2]) == f


def test_converge_cli(capsys):
    code, out, _ = run_cli(capsys, "converge", "--ghz", "3", "--theta", "pi/4,pi/4,pi/4",
                           "--eps", "1e-3,1e-4,1e-5", "--L", "4", "--M", "8")
    assert code == 0
    table = rows(out)
    assert table[0] == ["epsilon", "sup_norm", "eps_LM", "bound"]
    errs = [float(r[1]) for r in table[1:]]
    assert errs[0] > errs[1] > errs[2]
    assert all(float(r[1]) <= float(r[3]) for r in table[1:])


def test_converge_report_flags():
    report = converge(ExperimentSpec.singlet(PI / 4, 0), (1e-2, 1e-3), 3, 8)
    assert report.strictly_decreasing and report.within_bound


def test_contradiction_cli(capsys):
    code, out, _ = run_cli(capsys, "contradiction")
    assert code == 0
    values = dict(rows(out)[1:])
    assert values["satisfying_assignments"] == "0"
    assert values["contradiction"].lower() == "true"


def test_census_cli(capsys):
    code, out, _ = run_cli(capsys, "census", "--single-spin", "--theta", "pi/2", "--L", "3",
                           "--M", "4", "--eps", "1e-3", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["v"] == 1


@pytest.mark.parametrize("args, code", [
    (("qm", "--ghz", "3", "--theta", "0,0"), 1),
    (("enumerate", "--ghz", "3", "--theta", "0.1,0,0"), 1),
    (("enumerate", "--ghz", "2", "--M", "7"), 1),
    (("bogus",), 1),
    (("qm", "--ghz", "2", "--singlet", "--theta", "0,0"), 1),
    (("qm", "--no-such-flag"), 1),
    ((), 1),
    (("enumerate", "--ghz", "3", "--method", "brute", "--L", "8", "--M", "8"), 2),
    (("enumerate", "--single-spin", "--theta", "pi/2", "--eps", "0", "--L", "2", "--M", "4"), 3),
    (("qm", "--ghz", "2"), 0),
])
def test_exit_codes(capsys, args, code):
    assert run_cli(capsys, *args)[0] == code


def test_unwritable_output_exits_2(capsys, tmp_path):
    target = tmp_path / "missing" / "out.csv"
    assert run_cli(capsys, "qm", "--ghz", "2", "-o", str(target))[0] == 2


def test_bad_circuit_file(capsys, tmp_path):
    path = tmp_path / "bad.fidc"
    path.write_text("qubits 2\nh 1\ncnot 2 1\nmeasure 1 0\nmeasure 2 0\n")
    code, _, err = run_cli(capsys, str(path))
    assert code == 1
    assert "3:1: validation error" in err


def test_circuit_path_positional(capsys, tmp_path):
    path = tmp_path / "g.fidc"
    path.write_text(serialize(ghz_circuit(2, [PI / 4, PI / 4])))
    code, out, _ = run_cli(capsys, str(path), "--eps", "1e-6", "--L", "2")
    assert code == 0
    assert len(rows(out)) == 5


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nghz = 2\ntheta = pi/4, pi/4\neps = 1e-3\nL = 2\n")
    out_a = tmp_path / "a.json"
    assert run_cli(capsys, "enumerate", "--config", str(cfg), "-o", str(out_a))[0] == 0
    data = json.loads(out_a.read_text())
    assert data["params"]["epsilon"] == 1e-3 and data["params"]["L"] == 2
    out_b = tmp_path / "b.json"
    assert run_cli(capsys, "enumerate", "--config", str(cfg), "--L", "3", "-o", str(out_b))[0] == 0
    data = json.loads(out_b.read_text())
    assert data["params"]["L"] == 3 and data["params"]["epsilon"] == 1e-3
    out_c = tmp_path / "c.json"
    assert run_cli(capsys, "enumerate", "--config", str(cfg), "--singlet", "--theta", "0,0",
                   "-o", str(out_c))[0] == 0
    assert json.loads(out_c.read_text())["params"]["source"] == "singlet-pair"
    cfg.write_text("nonsense = 1\n")
    assert run_cli(capsys, "enumerate", "--config", str(cfg))[0] == 1


def test_sample_byte_identical(capsys, tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        traj = tmp_path / ("t" + name)
        code, _, _ = run_cli(capsys, "sample", "--ghz", "3", "--theta", "pi/4,pi/2,3pi/4",
                             "--eps", "1e-3", "--L", "2", "--M", "8", "--n", "5000",
                             "--seed", "42", "--trajectories", "3",
                             "--trajectory-output", str(traj), "-o", str(path))
        assert code == 0
        outs.append((path.read_bytes(), traj.read_bytes()))
    assert outs[0] == outs[1]
    table = rows(outs[0][0].decode())
    assert table[0] == ["outcome", "count", "p_fid"]
    assert sum(int(r[1]) for r in table[1:]) == 5000
    traj_rows = rows(outs[0][1].decode())
    assert traj_rows[0] == ["sample", "outcome", "variable", "spin", "time", "segment", "m", "phi"]
    assert {r[0] for r in traj_rows[1:]} == {"0", "1", "2"}


def test_sample_json_deterministic():
    spec = ExperimentSpec.single(0.0, PI / 4)
    p = WeightParams(1e-3, 3, 8)
    a, _ = run_sample(spec, p, seed=1, n=1000)
    b, _ = run_sample(spec, p, seed=1, n=1000)
    assert render(a, "json") == render(b, "json")


def test_threads_flag_same_output(capsys, monkeypatch):
    args = ("enumerate", "--ghz", "3", "--theta", "pi/4,pi/4,pi/4", "--L", "2")
    _, one, _ = run_cli(capsys, *args, "--threads", "1")
    _, four, _ = run_cli(capsys, *args, "--threads", "4")
    assert one == four


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fidgibbs", "qm", "--ghz", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "outcome,p_qm,p_fid,abs_diff"
