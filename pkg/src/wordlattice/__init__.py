"""Multi-granularity word-lattice toolkit.

Builds word lattices over character text with a vocabulary-compiled
multi-pattern automaton, classifies positional relations between lattice
tokens, generates leakage-free masked-segment pre-training instances,
and verifies lattice position attention numerically in a desk-scale
encoder.
"""

from .errors import (
    ConfigError,
    EmptyInput,
    InvalidSpan,
    PositionOverflow,
    ShapeError,
    WordLatticeError,
)
from .geometry import (
    DistanceOffsets,
    PositionRelation,
    clip,
    distance_offsets,
    relation,
)
from .instances import PretrainInstance, build_pretrain_instance
from .lattice import Lattice, LatticeToken, build_lattice, extract_char_chain
from .matcher import PatternMatcher, compile_matcher
from .normalize import normalize_text
from .segments import Segment, detect_segments
from .vocab import Vocabulary, build_vocabulary

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "EmptyInput",
    "InvalidSpan",
    "PositionOverflow",
    "ShapeError",
    "WordLatticeError",
    "DistanceOffsets",
    "PositionRelation",
    "clip",
    "distance_offsets",
    "relation",
    "PretrainInstance",
    "build_pretrain_instance",
    "Lattice",
    "LatticeToken",
    "build_lattice",
    "extract_char_chain",
    "PatternMatcher",
    "compile_matcher",
    "normalize_text",
    "Segment",
    "detect_segments",
    "Vocabulary",
    "build_vocabulary",
    "__version__",
]
