"""Exception hierarchy shared by all transferops modules.

Two base classes matter to callers: :class:`PreconditionError` for inputs
that violate a documented contract (CLI exit code 2) and
:class:`NumericalError` for failures discovered during computation
(CLI exit code 3).
"""


class TransferOpsError(Exception):
    """Base class for all transferops errors."""


class PreconditionError(TransferOpsError):
    """An input violates a documented precondition."""


class NumericalError(TransferOpsError):
    """A computation failed or produced values outside its contract."""


class OutOfDomainError(PreconditionError):
    """A state lies outside the configured domain box."""


class UnsupportedConfigurationError(PreconditionError):
    """The requested operation is undefined for this configuration."""


class SamplingFailureError(NumericalError):
    """Too many sampled pairs were rejected (domain too leaky)."""


class EmptyDatasetError(PreconditionError):
    """No usable samples: every cell of the partition is empty."""


class IllConditionedBasisError(NumericalError):
    """The regularized Gram matrix is numerically singular."""


class DanglingVertexError(PreconditionError):
    """A vertex has zero out-degree, so no transition row exists."""


class NoUniqueInvariantError(PreconditionError):
    """The chain is reducible; the invariant density is not unique."""


class InfeasibleCirculationError(PreconditionError):
    """A circulation perturbation would produce a negative edge weight."""


class DegenerateDensityError(NumericalError):
    """A propagated density vanished at some vertex."""


class ImageDensityDegenerateError(PreconditionError):
    """The image density nu has a zero entry; operators are undefined."""


class NotSelfAdjointError(PreconditionError):
    """The weighted symmetrization of the operator is not symmetric."""


class NearNullSingularError(PreconditionError):
    """The eigenvalue is too close to zero to form a singular pair."""


class ConvergenceError(NumericalError):
    """An iterative solver failed to converge."""


class DegenerateInputError(PreconditionError):
    """Fewer distinct points than requested clusters."""


class EmptyBlockError(PreconditionError):
    """A partition block is empty or carries zero mass."""
