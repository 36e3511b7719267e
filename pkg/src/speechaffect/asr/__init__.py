"""Transcript quality metrics and word-level error analytics."""

from .align import EditAlignment, EditOp, align, cer, char_alignment, pooled_wer, wer
from .analytics import (
    AFFECT_CLASSES,
    INSERTION,
    LENGTH_BINS,
    UNCLASSIFIED,
    ClassStatsRow,
    ConfidenceSummary,
    ScoredUtterance,
    affect_band,
    affect_class_of,
    bucketize_affect,
    class_stats,
    confidence_summary,
    evaluate_system,
    length_bin,
    length_binned_wer,
    per_emotion_wer,
    score_system,
    token_correctness,
)
from .ngram import (
    bleu,
    brevity_penalty,
    clipped_counts,
    corpus_bleu,
    corpus_gleu,
    effective_ref_length,
    gleu,
    gleu_counts,
    ngrams,
)
