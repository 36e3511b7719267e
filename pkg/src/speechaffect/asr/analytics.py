"""Word-level error analytics over an aligned corpus."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from ..dataio import AffectLexicon, ClassLexicon, UtteranceRecord
from ..errors import InputError
from .align import DEL, INS, MATCH, SUB, EditAlignment, align, char_alignment
from .ngram import corpus_bleu, corpus_gleu

UNCLASSIFIED = "unclassified"
INSERTION = "insertion"
AFFECT_DIMS = ("V", "A", "D")
LENGTH_BINS: tuple[tuple[str, int, float], ...] = (
    ("<=10", 0, 10),
    ("11-20", 11, 20),
    ("21-30", 21, 30),
    (">=31", 31, math.inf),
)
SHORT_UTTERANCE = 10


def length_bin(n_words: int) -> str:
    for label, lo, hi in LENGTH_BINS:
        if lo <= n_words <= hi:
            return label
    raise InputError(f"negative length {n_words}")


@dataclass(frozen=True)
class ScoredUtterance:
    id: str
    ref: tuple[str, ...]
    hyp: tuple[str, ...]
    alignment: EditAlignment
    emotion: str | None = None
    confidences: tuple[float, ...] | None = None


def score_system(records: Sequence[UtteranceRecord], system: str) -> tuple[list[ScoredUtterance], int]:
    """Align every record that has a hypothesis from ``system``; also returns the missing count."""
    scored, missing = [], 0
    for rec in records:
        hyp = rec.hypothesis_tokens.get(system)
        if hyp is None:
            missing += 1
            continue
        scored.append(
            ScoredUtterance(
                rec.id,
                tuple(rec.reference_tokens),
                tuple(hyp),
                align(rec.reference_tokens, hyp),
                rec.emotion_label,
                rec.confidences.get(system),
            )
        )
    return scored, missing


# ---------------------------------------------------------------- class stats


@dataclass(frozen=True)
class ClassStatsRow:
    cls: str
    word_count: int
    error_count: int
    total_words: int
    total_errors: int

    @property
    def WR(self) -> float:
        return self.word_count / self.total_words if self.total_words else 0.0

    @property
    def ER(self) -> float:
        return self.error_count / self.total_errors if self.total_errors else 0.0

    @property
    def CR(self) -> float:
        return self.error_count / self.word_count if self.word_count else 0.0

    def fractions(self) -> tuple[Fraction, Fraction, Fraction]:
        wr = Fraction(self.word_count, self.total_words) if self.total_words else Fraction(0)
        er = Fraction(self.error_count, self.total_errors) if self.total_errors else Fraction(0)
        cr = Fraction(self.error_count, self.word_count) if self.word_count else Fraction(0)
        return wr, er, cr

    def as_dict(self) -> dict:
        return {
            "class": self.cls,
            "words": self.word_count,
            "errors": self.error_count,
            "WR": self.WR,
            "ER": self.ER,
            "CR": self.CR,
        }


ClassOf = Callable[[str], Iterable[str] | None]


def _lookup(class_of) -> ClassOf:
    if isinstance(class_of, (ClassLexicon, AffectLexicon)):
        return class_of.get
    if isinstance(class_of, Mapping):
        return class_of.get
    return class_of


def class_stats(
    alignments: Iterable[EditAlignment],
    class_of,
    classes: Iterable[str] | None = None,
) -> list[ClassStatsRow]:
    """WR / ER / CR per word class.

    A reference token counts once for every class it carries; tokens with no
    class land in ``unclassified``. Substitutions and deletions are charged
    to the reference token's classes, insertions to the ``insertion``
    pseudo-class.
    """
    lookup = _lookup(class_of)
    if classes is None:
        classes = class_of.tagset if isinstance(class_of, ClassLexicon) else ()
    words: dict[str, int] = defaultdict(int)
    errors: dict[str, int] = defaultdict(int)
    total_words = total_errors = 0
    for al in alignments:
        for op in al.ops:
            if op.kind == INS:
                errors[INSERTION] += 1
                total_errors += 1
                continue
            tags = lookup(op.ref)
            tags = set(tags) if tags else {UNCLASSIFIED}
            total_words += 1
            for tag in tags:
                words[tag] += 1
            if op.kind in (SUB, DEL):
                total_errors += 1
                for tag in tags:
                    errors[tag] += 1
    names = sorted(set(classes)) + [UNCLASSIFIED, INSERTION]
    names += sorted((set(words) | set(errors)) - set(names))
    return [
        ClassStatsRow(name, words[name], errors[name], total_words, total_errors)
        for name in names
    ]


def bucketize_affect(lexicon: AffectLexicon, word: str) -> dict[str, str] | str:
    """Per-dimension band of a word: [1, 3] low, (3, 6] mid, (6, 9] high; absent word -> "unknown"."""
    scores = lexicon.get(word)
    if scores is None:
        return "unknown"
    return {dim: affect_band(s) for dim, s in zip(AFFECT_DIMS, scores)}


def affect_band(score: float) -> str:
    if score <= 3.0:
        return "low"
    if score <= 6.0:
        return "mid"
    return "high"


AFFECT_CLASSES = tuple(f"{d}_{b}" for d in AFFECT_DIMS for b in ("low", "mid", "high"))


def affect_class_of(lexicon: AffectLexicon) -> ClassOf:
    def lookup(word: str):
        bands = bucketize_affect(lexicon, word)
        if bands == "unknown":
            return None
        return {f"{d}_{b}" for d, b in bands.items()}

    return lookup


# ---------------------------------------------------------------- length bins


@dataclass(frozen=True)
class LengthBinRow:
    bin: str
    utterances: int
    ratio: float
    ref_words: int
    errors: int

    @property
    def wer(self) -> float | None:
        return self.errors / self.ref_words if self.ref_words else None

    def as_dict(self) -> dict:
        return {
            "bin": self.bin,
            "utterances": self.utterances,
            "ratio": self.ratio,
            "wer": self.wer,
        }


def length_binned_wer(corpus: Sequence[ScoredUtterance]) -> list[LengthBinRow]:
    if not corpus:
        raise InputError("empty corpus")
    counts = {label: [0, 0, 0] for label, _, _ in LENGTH_BINS}
    for utt in corpus:
        c = counts[length_bin(len(utt.ref))]
        c[0] += 1
        c[1] += utt.alignment.N_ref
        c[2] += utt.alignment.errors
    n = len(corpus)
    return [
        LengthBinRow(label, c[0], c[0] / n, c[1], c[2]) for label, c in counts.items()
    ]


# ---------------------------------------------------------------- per emotion


@dataclass(frozen=True)
class EmotionRow:
    emotion: str
    utterances: int
    wer: float | None
    noun_ratio: float | None
    short_ratio: float

    def as_dict(self) -> dict:
        return {
            "emotion": self.emotion,
            "utterances": self.utterances,
            "wer": self.wer,
            "noun_ratio": self.noun_ratio,
            "short_ratio": self.short_ratio,
        }


@dataclass
class PerEmotion:
    rows: dict[str, EmotionRow]
    unlabeled: int = 0


def per_emotion_wer(
    corpus: Sequence[ScoredUtterance],
    class_lexicon: ClassLexicon | None = None,
    noun_tag: str = "Noun",
    per_utterance_mean: bool = False,
) -> PerEmotion:
    """WER, noun ratio and short-utterance ratio per emotion label.

    WER is pooled (total edits over total reference words) unless
    ``per_utterance_mean`` is set. Unlabelled utterances are excluded and
    counted.
    """
    groups: dict[str, list[ScoredUtterance]] = defaultdict(list)
    unlabeled = 0
    for utt in corpus:
        if utt.emotion is None:
            unlabeled += 1
        else:
            groups[utt.emotion].append(utt)
    rows = {}
    for emotion in sorted(groups):
        utts = groups[emotion]
        ref_words = sum(u.alignment.N_ref for u in utts)
        if per_utterance_mean:
            per = [u.alignment.errors / u.alignment.N_ref for u in utts if u.alignment.N_ref]
            wer = sum(per) / len(per) if per else None
        else:
            wer = sum(u.alignment.errors for u in utts) / ref_words if ref_words else None
        noun_ratio = None
        if class_lexicon is not None and ref_words:
            nouns = sum(
                1 for u in utts for w in u.ref if noun_tag in (class_lexicon.get(w) or ())
            )
            noun_ratio = nouns / ref_words
        short = sum(1 for u in utts if len(u.ref) <= SHORT_UTTERANCE) / len(utts)
        rows[emotion] = EmotionRow(emotion, len(utts), wer, noun_ratio, short)
    return PerEmotion(rows, unlabeled)


# ----------------------------------------------------------------- confidence


@dataclass
class ConfidenceSummary:
    by_correctness: dict[str, float | None]
    by_emotion: dict[str, float]
    by_length_bin: dict[str, float | None]
    counts: dict[str, int] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "by_correctness": self.by_correctness,
            "by_emotion": self.by_emotion,
            "by_length_bin": self.by_length_bin,
            "counts": self.counts,
        }


def token_correctness(alignment: EditAlignment) -> list[bool]:
    """Correctness flag for every hypothesis token, in hypothesis order."""
    return [op.kind == MATCH for op in alignment.ops if op.kind in (MATCH, SUB, INS)]


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def confidence_summary(corpus: Sequence[ScoredUtterance]) -> ConfidenceSummary | None:
    """Mean token confidence by correctness, emotion and utterance-length bin.

    Returns None when no utterance carries confidences for the system.
    """
    correct: list[float] = []
    incorrect: list[float] = []
    by_emotion: dict[str, list[float]] = defaultdict(list)
    by_bin: dict[str, list[float]] = {label: [] for label, _, _ in LENGTH_BINS}
    seen = False
    for utt in corpus:
        if utt.confidences is None:
            continue
        seen = True
        flags = token_correctness(utt.alignment)
        if len(flags) != len(utt.confidences):
            raise InputError(f"{utt.id}: confidences not aligned to hypothesis tokens")
        for ok, score in zip(flags, utt.confidences):
            if not 0.0 <= score <= 1.0:
                raise InputError(f"{utt.id}: confidence {score} outside [0, 1]")
            (correct if ok else incorrect).append(score)
            if utt.emotion is not None:
                by_emotion[utt.emotion].append(score)
            by_bin[length_bin(len(utt.ref))].append(score)
    if not seen:
        return None
    return ConfidenceSummary(
        {"correct": _mean(correct), "incorrect": _mean(incorrect)},
        {k: _mean(v) for k, v in sorted(by_emotion.items())},
        {k: _mean(v) for k, v in by_bin.items()},
        {"correct": len(correct), "incorrect": len(incorrect)},
    )


# --------------------------------------------------------------- full report


def evaluate_system(
    records: Sequence[UtteranceRecord],
    system: str,
    class_lexicon: ClassLexicon | None = None,
    affect_lexicon: AffectLexicon | None = None,
    smooth_bleu: bool = False,
    per_utterance_mean: bool = False,
) -> dict:
    """All transcript-quality numbers for one ASR system as a JSON-ready dict."""
    corpus, missing = score_system(records, system)
    if not corpus:
        raise InputError(f"no utterances with hypotheses for system {system!r}")
    alignments = [u.alignment for u in corpus]
    ref_words = sum(a.N_ref for a in alignments)
    if ref_words == 0:
        raise InputError("all references are empty")
    char_edits = char_total = 0
    for u in corpus:
        ca = char_alignment(u.ref, u.hyp)
        char_edits += ca.errors
        char_total += ca.N_ref
    nonempty = [u for u in corpus if u.hyp]
    report = {
        "system": system,
        "utterances": len(corpus),
        "missing": missing,
        "ref_words": ref_words,
        "S": sum(a.S for a in alignments),
        "D": sum(a.D for a in alignments),
        "I": sum(a.I for a in alignments),
        "wer": sum(a.errors for a in alignments) / ref_words,
        "cer": char_edits / char_total if char_total else None,
        "bleu": corpus_bleu([[u.ref] for u in nonempty], [u.hyp for u in nonempty], smooth=smooth_bleu)
        if nonempty else 0.0,
        "gleu": corpus_gleu([u.ref for u in corpus], [u.hyp for u in corpus]),
        "length_bins": [r.as_dict() for r in length_binned_wer(corpus)],
    }
    if class_lexicon is not None:
        report["class_stats"] = [r.as_dict() for r in class_stats(alignments, class_lexicon)]
    if affect_lexicon is not None:
        report["affect_stats"] = [
            r.as_dict()
            for r in class_stats(alignments, affect_class_of(affect_lexicon), AFFECT_CLASSES)
        ]
    emo = per_emotion_wer(corpus, class_lexicon, per_utterance_mean=per_utterance_mean)
    report["per_emotion"] = [r.as_dict() for r in emo.rows.values()]
    report["unlabeled_utterances"] = emo.unlabeled
    summary = confidence_summary(corpus)
    report["confidence_summary"] = None if summary is None else summary.as_dict()
    return report
