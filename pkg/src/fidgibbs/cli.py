"""``fidgibbs`` command line.

    fidgibbs EXPERIMENT [source flags] [engine flags] [-o PATH] [--format csv|json]

EXPERIMENT is one of the presets below or a ``.fidc`` circuit file (which runs
``enumerate`` on that circuit). A ``--config`` file holds ``key = value`` lines
named like the long flags; flags given on the command line win.

Exit codes: 0 success, 1 validation error, 2 resource or I/O error,
3 infeasible model, 4 an acceptance criterion failed.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import circuit as dsl
from .acceptance import run_all
from .angles import parse_angle, parse_angle_list
from .errors import FidError, ResourceError, SpecificationError
from .experiment import ExperimentSpec, decode_outcome
from .fid import WeightParams
from .harness import (
    compare,
    converge,
    emit,
    run_census,
    run_contradiction,
    run_sample,
    trajectory_rows,
    write_rows,
)

log = logging.getLogger("fidgibbs")

EXPERIMENTS = ("qm", "closed-form", "enumerate", "sample", "converge", "contradiction",
               "census", "acceptance")
SOURCE_KEYS = ("ghz", "ghz_sum_zero", "singlet", "single_spin", "sequential", "circuit")
DEFAULTS = {
    "experiment": None, "theta": None, "phi0": 0.0, "M": 8, "L": 4, "eps": (1e-5,),
    "method": "eliminate", "seed": 0, "n": 100_000, "trajectories": 0,
    "trajectory_output": None, "outcome": None, "max_kinks": 2, "threads": None,
    "criterion": None, "output": None, "format": None, "verbose": 0,
    "ghz": None, "ghz_sum_zero": None, "singlet": False, "single_spin": False,
    "sequential": False, "circuit": None,
}
EXIT_ACCEPTANCE_FAILED = 4


class UsageError(SpecificationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _angle(text):
    try:
        return parse_angle(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _angles(text):
    try:
        return parse_angle_list(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _floats(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fidgibbs", description=__doc__.split("\n\n")[0],
                argument_default=argparse.SUPPRESS,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("experiment", nargs="?", help=" | ".join(EXPERIMENTS) + " | PATH.fidc")
    src = p.add_argument_group("source (pick one)")
    src.add_argument("--ghz", type=int, metavar="N", help="GHZ_N chain circuit")
    src.add_argument("--ghz-sum-zero", type=int, metavar="N", help="GHZ_N with a sum-zero source")
    src.add_argument("--singlet", action="store_true", help="two spins opposite at the source")
    src.add_argument("--single-spin", action="store_true", help="one spin prepared at --phi0")
    src.add_argument("--sequential", action="store_true",
                     help="one spin at --phi0 measured at each --theta in turn")
    src.add_argument("--circuit", type=Path, metavar="PATH", help="a .fidc circuit file")
    p.add_argument("--theta", type=_angles, help="comma-separated settings, e.g. pi/4,0,3pi/8")
    p.add_argument("--phi0", type=_angle, help="initial angle (single-spin, sequential)")
    eng = p.add_argument_group("engine")
    eng.add_argument("--M", type=int, help="grid size (even), default 8")
    eng.add_argument("--L", type=int, help="steps per segment, default 4")
    eng.add_argument("--eps", type=_floats, help="epsilon; a comma list for converge")
    eng.add_argument("--method", choices=("eliminate", "brute"), help="engine route for enumerate")
    eng.add_argument("--threads", type=int, help="cap on parallel eliminations")
    smp = p.add_argument_group("sample / census")
    smp.add_argument("--seed", type=int)
    smp.add_argument("--n", type=int, help="number of samples")
    smp.add_argument("--trajectories", type=int, help="retain this many full trajectories")
    smp.add_argument("--trajectory-output", type=Path, metavar="PATH")
    smp.add_argument("--outcome", type=str, help="census of one outcome, e.g. +-+ (default pooled)")
    smp.add_argument("--max-kinks", type=int)
    p.add_argument("--criterion", type=_ints, help="acceptance: only these criteria")
    out = p.add_argument_group("output")
    out.add_argument("-o", "--output", type=Path, metavar="PATH")
    out.add_argument("--format", choices=("csv", "json"))
    out.add_argument("--config", type=Path, metavar="PATH", help="key = value defaults")
    out.add_argument("-v", "--verbose", action="count")
    return p


def read_config_file(path: Path, parser: argparse.ArgumentParser) -> dict:
    """Flat ``key = value`` file; keys are long flag names with or without dashes."""
    actions = {a.dest: a for a in parser._actions}
    values = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        dest = key.strip().lstrip("-").replace("-", "_")
        action = actions.get(dest)
        if action is None or dest == "config":
            raise UsageError(f"{path}:{lineno}: unknown key {key.strip()!r}")
        value = value.strip()
        if isinstance(action, argparse._StoreTrueAction):
            values[dest] = value.lower() in ("1", "true", "yes", "on")
        elif isinstance(action, argparse._CountAction):
            values[dest] = int(value)
        elif action.type is not None:
            try:
                values[dest] = action.type(value)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from None
        else:
            values[dest] = value
    return values


@dataclass
class RunConfig:
    experiment: str
    source: object = None
    epsilons: tuple[float, ...] = (1e-5,)
    L: int = 4
    M: int = 8
    method: str = "eliminate"
    seed: int = 0
    n: int = 100_000
    trajectories: int = 0
    trajectory_output: Path | None = None
    outcome: tuple[int, ...] | None = None
    max_kinks: int = 2
    criteria: list[int] | None = None
    output: Path | None = None
    format: str = "csv"
    verbosity: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def params(self) -> WeightParams:
        return WeightParams(self.epsilons[0], self.L, self.M)


def _source(opts: dict):
    picked = [k for k in SOURCE_KEYS if opts.get(k) not in (None, False)]
    if len(picked) > 1:
        raise UsageError("choose only one source: " + ", ".join("--" + k.replace("_", "-") for k in picked))
    if not picked:
        return None
    key = picked[0]
    theta = opts.get("theta")
    if key == "circuit":
        path = Path(opts["circuit"])
        if not path.exists():
            raise UsageError(f"circuit file {path} does not exist")
        if theta is not None:
            raise UsageError("--theta cannot be combined with --circuit")
        return dsl.load(path)
    if key in ("ghz", "ghz_sum_zero"):
        n = opts[key]
        if n is None or n < 1:
            raise UsageError("GHZ needs N >= 1")
        theta = theta if theta is not None else (0.0,) * n
        kind = "ghz-circuit" if key == "ghz" else "ghz-sum-zero"
        if len(theta) != n:
            raise UsageError(f"--theta needs {n} angles")
        return ExperimentSpec.ghz(theta, kind)
    if theta is None:
        raise UsageError("--theta is required for this source")
    phi0 = opts.get("phi0", 0.0)
    if key == "singlet":
        if len(theta) != 2:
            raise UsageError("--singlet needs two angles")
        return ExperimentSpec.singlet(*theta)
    if key == "single_spin":
        if len(theta) != 1:
            raise UsageError("--single-spin needs one angle")
        return ExperimentSpec.single(phi0, theta[0])
    return ExperimentSpec.sequential(phi0, theta)


def make_config(argv) -> RunConfig:
    parser = build_parser()
    given = vars(parser.parse_args(argv))
    opts = dict(DEFAULTS)
    if "config" in given:
        path = Path(given["config"])
        if not path.exists():
            raise UsageError(f"config file {path} does not exist")
        from_file = read_config_file(path, parser)
        if any(k in given for k in SOURCE_KEYS):
            from_file = {k: v for k, v in from_file.items() if k not in SOURCE_KEYS}
        opts.update(from_file)
    opts.update({k: v for k, v in given.items() if k != "config"})

    experiment = opts["experiment"]
    if experiment is None:
        raise UsageError("no experiment given; choose one of " + ", ".join(EXPERIMENTS))
    if experiment.endswith(dsl.FILE_EXTENSION):
        if opts.get("circuit") is not None:
            raise UsageError("circuit given twice")
        opts["circuit"] = experiment
        experiment = "enumerate"
    if experiment not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {experiment!r}")
    fmt = opts["format"]
    if fmt is None:
        out = opts["output"]
        fmt = "json" if out is not None and Path(out).suffix.lower() == ".json" else "csv"
    if opts["threads"] is not None:
        os.environ["FIDGIBBS_THREADS"] = str(opts["threads"])
    outcome = decode_outcome(opts["outcome"]) if opts["outcome"] else None
    return RunConfig(
        experiment=experiment, source=_source(opts), epsilons=tuple(opts["eps"]),
        L=opts["L"], M=opts["M"], method=opts["method"], seed=opts["seed"], n=opts["n"],
        trajectories=opts["trajectories"], trajectory_output=opts["trajectory_output"],
        outcome=outcome, max_kinks=opts["max_kinks"], criteria=opts["criterion"],
        output=opts["output"], format=fmt, verbosity=opts["verbose"],
    )


def _need_source(cfg: RunConfig):
    if cfg.source is None:
        raise UsageError(f"{cfg.experiment} needs a source (--ghz, --singlet, --circuit, ...)")
    return cfg.source


def _write(cfg: RunConfig, report) -> None:
    text = emit(report, cfg.format, cfg.output)
    if cfg.output is None:
        sys.stdout.write(text)


def run(cfg: RunConfig) -> int:
    """Execute one experiment; returns the exit code. Errors propagate as FidError."""
    exp = cfg.experiment
    if exp == "contradiction":
        _write(cfg, run_contradiction())
    elif exp == "acceptance":
        results = run_all(set(cfg.criteria) if cfg.criteria else None)
        for r in results:
            print(r.line())
        return 0 if all(r.passed for r in results) else EXIT_ACCEPTANCE_FAILED
    elif exp in ("qm", "closed-form"):
        _write(cfg, compare(_need_source(cfg), method="qm-oracle" if exp == "qm" else "closed-form"))
    elif exp == "enumerate":
        _write(cfg, compare(_need_source(cfg), cfg.params, method=cfg.method))
    elif exp == "converge":
        report = converge(_need_source(cfg), cfg.epsilons, cfg.L, cfg.M)
        _write(cfg, report)
        if not report.strictly_decreasing:
            log.warning("sup-norm error is not strictly decreasing in epsilon")
    elif exp == "census":
        _write(cfg, run_census(_need_source(cfg), cfg.params, cfg.max_kinks, cfg.outcome))
    elif exp == "sample":
        source = _need_source(cfg)
        report, batch = run_sample(source, cfg.params, cfg.seed, cfg.n, cfg.trajectories)
        _write(cfg, report)
        if cfg.trajectory_output is not None:
            write_rows(trajectory_rows(source, cfg.params, batch), cfg.trajectory_output)
    return 0


def main(argv=None) -> int:
    try:
        cfg = make_config(sys.argv[1:] if argv is None else argv)
        logging.basicConfig(level=logging.DEBUG if cfg.verbosity > 1 else
                            logging.INFO if cfg.verbosity else logging.WARNING,
                            format="%(levelname)s %(message)s")
        return run(cfg)
    except FidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ResourceError.exit_code


if __name__ == "__main__":
    sys.exit(main())
