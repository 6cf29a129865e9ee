class InputError(ValueError):
    """Malformed or inconsistent input (bad ids, shapes, formats)."""


class RefusalError(RuntimeError):
    """The request exceeds a configured hard cap (interface size, brute-force size)."""
