"""Cross-domain aspect-sentiment sequence labeler.

Thin re-export of the native module: data-model conversions, exact-match
scoring, the synthetic corpus generator, gradient checks and the training
pipeline.
"""

from ._core import (  # noqa: F401
    evaluate,
    generate_synth,
    grad_check,
    inspect_attention,
    label_opinions,
    micro_f1,
    parse_conll,
    predict,
    segments_from_tags,
    tags_from_segments,
    train,
    unified_tags,
    unified_to_boundary,
)

__all__ = [
    "evaluate",
    "generate_synth",
    "grad_check",
    "inspect_attention",
    "label_opinions",
    "micro_f1",
    "parse_conll",
    "predict",
    "segments_from_tags",
    "tags_from_segments",
    "train",
    "unified_tags",
    "unified_to_boundary",
]
