"""BLEU and GLEU over token sequences."""

from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

from ..errors import InputError

Tokens = Sequence[str]


def ngrams(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def clipped_counts(references: Sequence[Tokens], hypothesis: Tokens, n: int) -> tuple[int, int]:
    """(clipped matches, hypothesis n-gram total) for one order."""
    hyp = ngrams(hypothesis, n)
    max_ref: Counter = Counter()
    for ref in references:
        for gram, count in ngrams(ref, n).items():
            max_ref[gram] = max(max_ref[gram], count)
    matches = sum(min(count, max_ref[gram]) for gram, count in hyp.items())
    return matches, sum(hyp.values())


def effective_ref_length(references: Sequence[Tokens], hyp_len: int) -> int:
    """Reference length closest to the hypothesis; ties go to the shorter one."""
    return min((abs(len(r) - hyp_len), len(r)) for r in references)[1]


def brevity_penalty(c: int, r: int) -> float:
    if c <= 0:
        raise InputError("candidate length must be positive")
    return 1.0 if c > r else math.exp(1.0 - r / c)


def _bleu_from_counts(matches, totals, c, r, weights, smooth) -> float:
    log_sum = 0.0
    for m, t, w in zip(matches, totals, weights):
        if smooth:
            m, t = m + 1, t + 1
        if m == 0 or t == 0:
            return 0.0
        log_sum += w * math.log(m / t)
    return brevity_penalty(c, r) * math.exp(log_sum)


def bleu(
    references: Sequence[Tokens],
    hypothesis: Tokens,
    max_n: int = 4,
    weights: Sequence[float] | None = None,
    smooth: bool = False,
) -> float:
    """Sentence BLEU with clipped precisions and brevity penalty.

    Unsmoothed, any zero precision (including an order the hypothesis is too
    short to contain) gives 0. ``smooth`` adds one to matches and totals of
    every order.
    """
    if not hypothesis:
        raise InputError("BLEU needs a non-empty hypothesis")
    if not references:
        raise InputError("BLEU needs at least one reference")
    weights = [1.0 / max_n] * max_n if weights is None else list(weights)
    counts = [clipped_counts(references, hypothesis, n) for n in range(1, max_n + 1)]
    r = effective_ref_length(references, len(hypothesis))
    return _bleu_from_counts(
        [m for m, _ in counts], [t for _, t in counts], len(hypothesis), r, weights, smooth
    )


def corpus_bleu(
    references: Sequence[Sequence[Tokens]],
    hypotheses: Sequence[Tokens],
    max_n: int = 4,
    weights: Sequence[float] | None = None,
    smooth: bool = False,
) -> float:
    """Corpus BLEU: clipped counts and lengths pooled over all segments."""
    if len(references) != len(hypotheses):
        raise InputError("references and hypotheses differ in length")
    if not hypotheses:
        raise InputError("empty corpus")
    weights = [1.0 / max_n] * max_n if weights is None else list(weights)
    matches = [0] * max_n
    totals = [0] * max_n
    c = r = 0
    for refs, hyp in zip(references, hypotheses):
        if not refs:
            raise InputError("segment without references")
        for n in range(1, max_n + 1):
            m, t = clipped_counts(refs, hyp, n)
            matches[n - 1] += m
            totals[n - 1] += t
        c += len(hyp)
        r += effective_ref_length(refs, len(hyp))
    if c == 0:
        raise InputError("all hypotheses are empty")
    return _bleu_from_counts(matches, totals, c, r, weights, smooth)


def gleu_counts(reference: Tokens, hypothesis: Tokens, max_n: int = 4) -> tuple[int, int, int]:
    """(matching n-grams, hypothesis n-grams, reference n-grams) pooled over orders 1..max_n."""
    matches = hyp_total = ref_total = 0
    for n in range(1, max_n + 1):
        h, r = ngrams(hypothesis, n), ngrams(reference, n)
        matches += sum((h & r).values())
        hyp_total += sum(h.values())
        ref_total += sum(r.values())
    return matches, hyp_total, ref_total


def gleu(reference: Tokens, hypothesis: Tokens, max_n: int = 4) -> float:
    """min(precision, recall) of pooled n-gram matches."""
    if not reference or not hypothesis:
        raise InputError("GLEU needs non-empty reference and hypothesis")
    m, h, r = gleu_counts(reference, hypothesis, max_n)
    return min(m / h, m / r)


def corpus_gleu(references: Sequence[Tokens], hypotheses: Sequence[Tokens], max_n: int = 4) -> float:
    if len(references) != len(hypotheses) or not hypotheses:
        raise InputError("need equally many, non-empty references and hypotheses")
    m = h = r = 0
    for ref, hyp in zip(references, hypotheses):
        dm, dh, dr = gleu_counts(ref, hyp, max_n)
        m, h, r = m + dm, h + dh, r + dr
    if h == 0 or r == 0:
        return 0.0
    return min(m / h, m / r)
