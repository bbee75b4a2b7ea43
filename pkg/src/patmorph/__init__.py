"""Pattern-based morphological analysis: joint segmentation and POS tagging."""

from .core import (
    BOS,
    AnnotatedSentence,
    FormatError,
    Morpheme,
    PatmorphError,
    PatternEntry,
    PatternKey,
    Tag,
    TagInterner,
    intern_tag,
    tag_prefix,
)
from .model import CompiledModel, ModelFormatError

__all__ = [
    "BOS",
    "AnnotatedSentence",
    "CompiledModel",
    "FormatError",
    "ModelFormatError",
    "Morpheme",
    "PatmorphError",
    "PatternEntry",
    "PatternKey",
    "Tag",
    "TagInterner",
    "intern_tag",
    "tag_prefix",
]

__version__ = "0.1.0"
