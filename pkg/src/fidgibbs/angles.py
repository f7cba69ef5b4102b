"""Angle arithmetic modulo 2*pi, the discrete grid, and the angle literal grammar.

Angle literals are shared by the circuit files and the command line::

    0   0.3   -1.5e-2   pi   -pi/2   pi/4   3pi/8   3*pi/8
"""

from __future__ import annotations

import math
import re
from fractions import Fraction

TWO_PI = 2.0 * math.pi
ANGLE_TOL = 1e-12

_PI_LITERAL = re.compile(
    r"^(?P<sign>[+-]?)(?P<num>\d+)?\s*\*?\s*(?:pi|π)(?:\s*/\s*(?P<den>\d+))?$",
    re.IGNORECASE,
)
_MAX_DENOMINATOR = 4096


def reduce_angle(x: float) -> float:
    """Reduce to [0, 2*pi)."""
    r = math.fmod(x, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    if r >= TWO_PI:
        r -= TWO_PI
    return r


def angle_distance(a: float, b: float) -> float:
    """Shortest distance between two angles on the circle."""
    d = reduce_angle(a - b)
    return min(d, TWO_PI - d)


def angles_equal(a: float, b: float, tol: float = ANGLE_TOL) -> bool:
    return angle_distance(a, b) <= tol


def grid_angle(m: int, grid_size: int) -> float:
    return TWO_PI * (m % grid_size) / grid_size


def grid_index(theta: float, grid_size: int) -> int:
    """Index m with theta == 2*pi*m/M, raising GridError when theta is off-grid.

    Off-grid angles are never snapped.
    """
    from .errors import GridError

    m = round(reduce_angle(theta) * grid_size / TWO_PI)
    if not angles_equal(theta, grid_angle(m, grid_size)):
        raise GridError(f"angle {theta!r} is not on the M={grid_size} grid")
    return m % grid_size


def on_grid(theta: float, grid_size: int) -> bool:
    m = round(reduce_angle(theta) * grid_size / TWO_PI)
    return angles_equal(theta, grid_angle(m, grid_size))


def angle_from_pi_fraction(f: Fraction) -> float:
    """The float angle f*pi, reduced; the single evaluation rule for pi literals."""
    f = f % 2
    if f == 0:
        return 0.0
    return reduce_angle(f.numerator * math.pi / f.denominator)


def parse_angle(text: str) -> float:
    """Parse an angle literal to radians in [0, 2*pi). Raises ValueError."""
    s = text.strip()
    m = _PI_LITERAL.match(s)
    if m:
        num = int(m.group("num")) if m.group("num") else 1
        den = int(m.group("den")) if m.group("den") else 1
        if den == 0:
            raise ValueError(f"zero denominator in angle {text!r}")
        f = Fraction(num, den)
        if m.group("sign") == "-":
            f = -f
        return angle_from_pi_fraction(f)
    try:
        value = float(s)
    except ValueError:
        raise ValueError(f"malformed angle {text!r}") from None
    if not math.isfinite(value) or s.lower().lstrip("+-") in ("inf", "infinity", "nan"):
        raise ValueError(f"malformed angle {text!r}")
    return reduce_angle(value)


def pi_fraction(theta: float) -> Fraction | None:
    """Return f with angle_from_pi_fraction(f) == theta exactly, if a small one exists."""
    f = Fraction(theta / math.pi).limit_denominator(_MAX_DENOMINATOR) % 2
    if angle_from_pi_fraction(f) == theta:
        return f
    return None


def format_angle(theta: float) -> str:
    """Canonical literal: rational multiples of pi when exact, else repr of the float."""
    theta = reduce_angle(theta)
    f = pi_fraction(theta)
    if f is None:
        return repr(theta)
    if f == 0:
        return "0"
    num = "" if f.numerator == 1 else str(f.numerator)
    den = "" if f.denominator == 1 else f"/{f.denominator}"
    return f"{num}pi{den}"


def parse_angle_list(text: str) -> tuple[float, ...]:
    return tuple(parse_angle(part) for part in text.split(",") if part.strip())
