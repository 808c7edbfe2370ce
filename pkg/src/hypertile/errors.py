"""Shared exception types."""


class InputError(ValueError):
    """Malformed or inconsistent arguments: dimension mismatch, bad ranges, empty regions."""


class DomainError(ValueError):
    """Point outside a model's domain: nonpositive height, point not inside the form's negative cone."""


class TilingError(RuntimeError):
    """A tiling operation hit a state the construction rules out (indicates a bug in the spec data)."""
