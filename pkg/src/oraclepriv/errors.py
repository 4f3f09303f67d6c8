"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes (2 input, 3 capacity).
"""


class InputError(ValueError):
    """Malformed or out-of-range input."""


class CapacityError(RuntimeError):
    """An operation would need to enumerate something beyond the configured cap."""


class UnsupportedError(NotImplementedError):
    """Requested family or construction is not available."""
