"""Exception types shared across the pipeline."""


class SceneForgeError(Exception):
    """Base class for all pipeline errors."""


class MeshError(SceneForgeError):
    """Mesh file failed to parse or violates geometric invariants."""


class ValidationError(SceneForgeError):
    """Input data (priors, configs, manifests) failed validation."""


class UnknownCategoryError(SceneForgeError):
    """A category was queried that the knowledge base does not cover."""


class BudgetExhaustedError(SceneForgeError):
    """Generation attempt budget ran out before the requested count."""

    def __init__(self, message, partial=None, stats=None):
        super().__init__(message)
        self.partial = partial
        self.stats = stats


class ArchParseError(SceneForgeError):
    """Architecture string contains an unknown token."""
