"""Exception types shared across the toolkit.

``InputError`` covers anything the caller can fix (bad files, contract
violations); the CLI maps it to exit code 1. ``InvariantError`` signals an
internal inconsistency and maps to exit code 2.
"""


class InputError(ValueError):
    pass


class UndefinedResultError(InputError):
    """A metric is undefined for the given input (e.g. empty reference)."""


class InvariantError(RuntimeError):
    pass
