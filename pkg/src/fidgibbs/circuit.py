"""Line-oriented description language for the GHZ_N circuit family.

One statement per line, ``#`` starts a comment::

    qubits 3
    h 1
    cnot 1 2
    cnot 2 3
    measure 1 0
    measure 2 pi/2
    measure 3 pi/2
    steps q2.0 6

``ghz N [theta_1 ... theta_N]`` expands to the whole chain (angles default to 0).
``steps <segment> <L>`` overrides the propagation length of one free segment.
Segments are named ``q<j>.<k>``: the k-th free stretch of qubit j's worldline,
bounded by its gates and its measurement.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .angles import format_angle, parse_angle, reduce_angle
from .errors import SpecificationError
from .experiment import ExperimentSpec, SourceKind

FILE_EXTENSION = ".fidc"

_INT = re.compile(r"^[+-]?\d+$")
_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")


@dataclass(frozen=True)
class Hadamard:
    qubit: int


@dataclass(frozen=True)
class Cnot:
    control: int
    target: int


@dataclass(frozen=True)
class Measure:
    qubit: int
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", reduce_angle(float(self.theta)))


Gate = Hadamard | Cnot | Measure


class ParseError(SpecificationError):
    """Lexical, syntactic or validation failure, located at a line and column (1-based)."""

    def __init__(self, line: int, column: int, message: str, kind: str = "syntactic"):
        super().__init__(f"{line}:{column}: {kind} error: {message}")
        self.line = line
        self.column = column
        self.message = message
        self.kind = kind


def segment_ids(n_qubits: int) -> list[str]:
    """Free-propagation segments of the chain circuit, in worldline order."""
    if n_qubits == 1:
        return ["q1.0"]
    ids = []
    for j in range(1, n_qubits):
        ids += [f"q{j}.0", f"q{j}.1"]
    ids.append(f"q{n_qubits}.0")
    return ids


@dataclass(frozen=True)
class CircuitSpec:
    n_qubits: int
    gates: tuple[Gate, ...]
    segment_lengths: dict[str, int] = field(default_factory=dict)

    @property
    def settings(self) -> tuple[float, ...]:
        thetas = {g.qubit: g.theta for g in self.gates if isinstance(g, Measure)}
        return tuple(thetas[j] for j in range(1, self.n_qubits + 1))

    def segment_length(self, segment: str, default: int) -> int:
        return self.segment_lengths.get(segment, default)

    def to_experiment(self) -> ExperimentSpec:
        return ExperimentSpec(SourceKind.GHZ_CIRCUIT, self.n_qubits, self.settings)


def ghz_circuit(n: int, settings=None, segment_lengths=None) -> CircuitSpec:
    """The Hadamard plus CNOT-chain circuit preparing GHZ_n, measured at ``settings``."""
    if n < 1:
        raise ValueError("need at least one qubit")
    settings = tuple(settings) if settings is not None else (0.0,) * n
    if len(settings) != n:
        raise ValueError(f"need {n} settings, got {len(settings)}")
    gates: list[Gate] = [Hadamard(1)]
    gates += [Cnot(j, j + 1) for j in range(1, n)]
    gates += [Measure(j, settings[j - 1]) for j in range(1, n + 1)]
    return CircuitSpec(n, tuple(gates), dict(segment_lengths or {}))


def circuit_for(spec: ExperimentSpec) -> CircuitSpec:
    if spec.kind is not SourceKind.GHZ_CIRCUIT:
        raise ValueError(f"no circuit for source kind {spec.kind.value}")
    return ghz_circuit(spec.n_spins, spec.settings)


def _qubits_of(gate: Gate) -> tuple[int, ...]:
    if isinstance(gate, Cnot):
        return (gate.control, gate.target)
    return (gate.qubit,)


def validate(circuit: CircuitSpec, lines: list[int] | None = None, last_line: int = 1) -> None:
    """Check the chain topology; raise a validation ParseError on the first violation."""
    n = circuit.n_qubits

    def fail(i, msg):
        line = lines[i] if lines is not None and i is not None else last_line
        raise ParseError(line, 1, msg, "validation")

    if n < 1:
        fail(None, "need at least one qubit")
    measured: set[int] = set()
    next_cnot = 1
    seen_h = False
    for i, gate in enumerate(circuit.gates):
        for q in _qubits_of(gate):
            if not 1 <= q <= n:
                fail(i, f"qubit {q} out of range 1..{n}")
            if q in measured and not isinstance(gate, Measure):
                fail(i, f"gate on qubit {q} after its measurement")
        if isinstance(gate, Hadamard):
            if seen_h:
                fail(i, "more than one Hadamard")
            if gate.qubit != 1:
                fail(i, "the Hadamard must act on qubit 1")
            if i != 0:
                fail(i, "the Hadamard must be the first gate")
            seen_h = True
        elif not seen_h:
            fail(i, "missing Hadamard on qubit 1 before other gates")
        elif isinstance(gate, Cnot):
            if (gate.control, gate.target) != (next_cnot, next_cnot + 1):
                fail(i, f"expected cnot {next_cnot} {next_cnot + 1}, got cnot "
                        f"{gate.control} {gate.target} (only the chain topology is supported)")
            next_cnot += 1
        else:
            q = gate.qubit
            if q in measured:
                fail(i, f"qubit {q} measured twice")
            # last gate on q is cnot(q, q+1), or cnot(q-1, q) for the final qubit
            needed = q if q < n else q - 1
            if next_cnot <= needed:
                fail(i, f"qubit {q} measured before its last gate")
            measured.add(q)
    if not seen_h:
        fail(None, "missing Hadamard")
    if next_cnot != n:
        fail(None, f"missing cnot {next_cnot} {next_cnot + 1}")
    missing = sorted(set(range(1, n + 1)) - measured)
    if missing:
        fail(None, f"qubit {missing[0]} is never measured")
    valid_ids = set(segment_ids(n))
    for seg, length in circuit.segment_lengths.items():
        if seg not in valid_ids:
            fail(None, f"unknown segment {seg!r}")
        if not isinstance(length, int) or length < 1:
            fail(None, f"segment {seg!r} needs a positive length")


def _tokens(text: str) -> list[tuple[str, int]]:
    return [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", text)]


def parse(source: str) -> CircuitSpec:
    """Parse and validate circuit text. Raises ParseError."""
    n_qubits = None
    gates: list[Gate] = []
    gate_lines: list[int] = []
    steps: dict[str, int] = {}
    last_line = 1

    def integer(tok, lineno, what):
        text, col = tok
        if not _INT.match(text):
            raise ParseError(lineno, col, f"expected integer {what}, got {text!r}", "lexical")
        return int(text)

    def need_qubits(lineno, col):
        if n_qubits is None:
            raise ParseError(lineno, col, "gate before 'qubits' declaration")

    def arity(toks, lineno, count, usage):
        if len(toks) - 1 != count:
            col = toks[min(len(toks) - 1, count + 1)][1] if len(toks) > 1 else toks[0][1]
            raise ParseError(lineno, col, f"usage: {usage}")

    for lineno, raw in enumerate(source.splitlines(), start=1):
        text = raw.split("#", 1)[0]
        toks = _tokens(text)
        if not toks:
            continue
        last_line = lineno
        for word, col in toks:
            if not all(c.isprintable() for c in word):
                raise ParseError(lineno, col, f"invalid character in {word!r}", "lexical")
        head, hcol = toks[0]
        kw = head.lower()
        if kw == "qubits":
            arity(toks, lineno, 1, "qubits N")
            if n_qubits is not None:
                raise ParseError(lineno, hcol, "qubit count declared twice", "validation")
            n_qubits = integer(toks[1], lineno, "qubit count")
            if n_qubits < 1:
                raise ParseError(lineno, toks[1][1], "need at least one qubit", "validation")
        elif kw == "ghz":
            if len(toks) < 2:
                raise ParseError(lineno, hcol, "usage: ghz N [theta_1 ... theta_N]")
            if n_qubits is not None or gates:
                raise ParseError(lineno, hcol, "ghz preset must be the only circuit statement",
                                 "validation")
            n = integer(toks[1], lineno, "qubit count")
            if n < 1:
                raise ParseError(lineno, toks[1][1], "need at least one qubit", "validation")
            if len(toks) not in (2, 2 + n):
                raise ParseError(lineno, toks[-1][1], f"ghz {n} takes 0 or {n} angles")
            thetas = [_angle(t, lineno) for t in toks[2:]] or [0.0] * n
            n_qubits = n
            preset = ghz_circuit(n, thetas)
            gates.extend(preset.gates)
            gate_lines.extend([lineno] * len(preset.gates))
        elif kw == "h":
            need_qubits(lineno, hcol)
            arity(toks, lineno, 1, "h QUBIT")
            gates.append(Hadamard(integer(toks[1], lineno, "qubit")))
            gate_lines.append(lineno)
        elif kw == "cnot":
            need_qubits(lineno, hcol)
            arity(toks, lineno, 2, "cnot CONTROL TARGET")
            gates.append(Cnot(integer(toks[1], lineno, "control"),
                              integer(toks[2], lineno, "target")))
            gate_lines.append(lineno)
        elif kw == "measure":
            need_qubits(lineno, hcol)
            arity(toks, lineno, 2, "measure QUBIT ANGLE")
            gates.append(Measure(integer(toks[1], lineno, "qubit"), _angle(toks[2], lineno)))
            gate_lines.append(lineno)
        elif kw == "steps":
            arity(toks, lineno, 2, "steps SEGMENT L")
            seg, scol = toks[1]
            if not _IDENT.match(seg):
                raise ParseError(lineno, scol, f"bad segment identifier {seg!r}", "lexical")
            length = integer(toks[2], lineno, "step count")
            if length < 1:
                raise ParseError(lineno, toks[2][1], "step count must be positive", "validation")
            if seg in steps:
                raise ParseError(lineno, scol, f"segment {seg!r} given twice", "validation")
            steps[seg] = length
        else:
            raise ParseError(lineno, hcol, f"unknown statement {head!r}")

    if n_qubits is None:
        raise ParseError(last_line, 1, "missing 'qubits' declaration", "validation")
    spec = CircuitSpec(n_qubits, tuple(gates), steps)
    validate(spec, gate_lines, last_line)
    return spec


def _angle(tok: tuple[str, int], lineno: int) -> float:
    text, col = tok
    try:
        return parse_angle(text)
    except ValueError as exc:
        raise ParseError(lineno, col, str(exc), "lexical") from None


def serialize(spec: CircuitSpec) -> str:
    """Canonical text; ``parse(serialize(spec)) == spec``."""
    lines = [f"qubits {spec.n_qubits}"]
    for g in spec.gates:
        if isinstance(g, Hadamard):
            lines.append(f"h {g.qubit}")
        elif isinstance(g, Cnot):
            lines.append(f"cnot {g.control} {g.target}")
        else:
            lines.append(f"measure {g.qubit} {format_angle(g.theta)}")
    for seg in sorted(spec.segment_lengths):
        lines.append(f"steps {seg} {spec.segment_lengths[seg]}")
    return "\n".join(lines) + "\n"


def load(path) -> CircuitSpec:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
