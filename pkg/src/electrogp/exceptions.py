class ElectroGPError(Exception):
    """Base class for errors raised by this package."""


class NumericalError(ElectroGPError):
    """A numerical routine could not produce a valid result."""


class ConditioningError(NumericalError):
    """Gram matrix stayed non positive definite after jitter escalation."""


class SamplerError(NumericalError):
    """Rejection sampler exhausted its attempt budget."""

    def __init__(self, message, acceptance_rate):
        super().__init__(f"{message} (estimated acceptance rate {acceptance_rate:.3g})")
        self.acceptance_rate = acceptance_rate


class DisconnectedGraphError(ElectroGPError):
    """The k-nearest-neighbour graph used by LLE has several components."""

    def __init__(self, components):
        self.components = components
        sizes = ", ".join(f"#{i}: {len(c)} points" for i, c in enumerate(components))
        super().__init__(
            f"k-NN graph is disconnected into {len(components)} components ({sizes}); "
            "increase k_neighbors"
        )


class StageError(ElectroGPError):
    """Failure inside one stage of the fitting pipeline."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


class DataIntegrityError(ElectroGPError):
    """Model file does not belong to the supplied data."""
