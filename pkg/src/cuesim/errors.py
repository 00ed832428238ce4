class ValidationError(ValueError):
    """Bad parameter or input; raised before any state is advanced."""


class InvariantViolation(RuntimeError):
    """A runtime safety invariant (platform envelope, rate limit) was broken."""
