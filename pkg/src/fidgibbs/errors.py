"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: validation problems exit 1, resource
problems exit 2, an unnormalizable model exits 3.
"""


class FidError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class SpecificationError(FidError, ValueError):
    """Invalid experiment, outcome vector or parameter."""


class GridError(SpecificationError):
    """An angle does not lie on the discrete M-grid."""


class UnsupportedTopologyError(SpecificationError):
    """A factor graph that the eliminator cannot handle (e.g. one with a cycle)."""


class ResourceError(FidError):
    """A computation would exceed a configured size cap."""

    exit_code = 2


class InfeasibleModelError(FidError):
    """Every outcome has zero weight, so the distribution cannot be normalized."""

    exit_code = 3
