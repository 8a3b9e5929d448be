"""Exception types shared across the toolkit."""


class WordLatticeError(Exception):
    """Base class for all toolkit errors."""


class EmptyInput(WordLatticeError):
    """Text is empty after normalization."""


class InvalidSpan(WordLatticeError):
    """A character span violates 1 <= s <= e or the dedup invariant."""


class PositionOverflow(WordLatticeError):
    """A token position exceeds the position-embedding capacity."""


class ShapeError(WordLatticeError):
    """Matrices passed to an attention combine step disagree in shape."""


class ConfigError(WordLatticeError):
    """Pipeline or encoder configuration is inconsistent."""
