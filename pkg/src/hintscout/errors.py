"""Exception types shared across the toolkit."""


class HintScoutError(Exception):
    """Base class for all toolkit errors."""


class FormatError(HintScoutError):
    """Malformed container, manifest, or config structure."""


class LengthError(FormatError):
    """Stream or payload shorter than its header declares."""


class ValidationError(HintScoutError):
    """Structurally sound input carrying invalid values (non-finite entries, mismatched dims)."""


class DegenerateLayerError(HintScoutError):
    """A representation is too degenerate for the requested similarity metric."""
