"""Exception hierarchy shared by every module."""


class HyperentError(Exception):
    """Base class for all errors raised by :mod:`hyperent`."""


class UsageError(HyperentError, ValueError):
    """An operation was called outside its contract (bad arity, label, matrix...)."""


class DegenerateStateError(HyperentError, ValueError):
    """The state has zero norm where a normalizable state is required."""


class PostSelectionError(HyperentError):
    """No branch survived a post-selection step."""


class ProtocolError(HyperentError):
    """Classical post-processing of a QKD round found no consistent explanation."""
