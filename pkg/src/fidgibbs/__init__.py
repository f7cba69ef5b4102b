"""Local future-input-dependent Gibbs-field model of planar spin correlations."""

from .angles import format_angle, parse_angle
from .circuit import CircuitSpec, ParseError, ghz_circuit, parse, serialize
from .errors import (
    FidError,
    GridError,
    InfeasibleModelError,
    ResourceError,
    SpecificationError,
    UnsupportedTopologyError,
)
from .experiment import ExperimentSpec, ProbabilityTable, SourceKind
from .fid import WeightParams, closed_form_distribution
from .qm import ghz_probability, oracle_distribution, qm_distribution

__version__ = "0.1.0"
