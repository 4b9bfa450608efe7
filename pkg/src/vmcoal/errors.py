"""Exception hierarchy shared by all modules."""


class ModelError(ValueError):
    """Raised when a model violates one of its structural hypotheses.

    ``path`` is the JSON path of the offending field when the model was read
    from a config (``$.V[0][1]``), otherwise a field name.
    """

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class AsymmetricMatrix(ModelError):
    pass


class NegativeEntry(ModelError):
    pass


class NonpositiveAlpha(ModelError):
    pass


class ReducibleMatrix(ModelError):
    pass


class NoConvergence(RuntimeError):
    """An iterative solver exceeded its iteration budget."""

    def __init__(self, message, t=None):
        self.t = t
        if t is not None:
            message = f"{message} (t={t!r})"
        super().__init__(message)


class SizeOverflow(ValueError):
    """Cluster-size enumeration would exceed the configured cap."""
