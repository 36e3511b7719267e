from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..errors import UndefinedResultError

MATCH, SUB, DEL, INS = "match", "sub", "del", "ins"


@dataclass(frozen=True)
class EditOp:
    kind: str
    ref: str | None = None
    hyp: str | None = None


@dataclass(frozen=True)
class EditAlignment:
    S: int
    D: int
    I: int
    N_ref: int
    ops: tuple[EditOp, ...]

    @property
    def matches(self) -> int:
        return self.N_ref - self.S - self.D

    @property
    def errors(self) -> int:
        return self.S + self.D + self.I

    @property
    def hyp_len(self) -> int:
        return self.matches + self.S + self.I


def align(ref: Sequence[str], hyp: Sequence[str]) -> EditAlignment:
    """Unit-cost Levenshtein alignment.

    The backtrace prefers match, then substitution, deletion, insertion, so
    the op sequence is reproducible when several minimal paths exist.
    """
    n, m = len(ref), len(hyp)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
    for j in range(1, m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        row, prev = dist[i], dist[i - 1]
        r = ref[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1] + (0 if r == hyp[j - 1] else 1)
            row[j] = min(diag, prev[j] + 1, row[j - 1] + 1)

    ops: list[EditOp] = []
    i, j = n, m
    S = D = I = 0
    while i > 0 or j > 0:
        here = dist[i][j]
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and here == dist[i - 1][j - 1]:
            ops.append(EditOp(MATCH, ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and here == dist[i - 1][j - 1] + 1:
            ops.append(EditOp(SUB, ref[i - 1], hyp[j - 1]))
            S += 1
            i, j = i - 1, j - 1
        elif i > 0 and here == dist[i - 1][j] + 1:
            ops.append(EditOp(DEL, ref[i - 1], None))
            D += 1
            i -= 1
        else:
            ops.append(EditOp(INS, None, hyp[j - 1]))
            I += 1
            j -= 1
    ops.reverse()
    return EditAlignment(S, D, I, n, tuple(ops))


def wer(alignment: EditAlignment) -> float:
    if alignment.N_ref == 0:
        raise UndefinedResultError("WER is undefined for an empty reference")
    return alignment.errors / alignment.N_ref


def pooled_wer(alignments: Sequence[EditAlignment]) -> float:
    total = sum(a.N_ref for a in alignments)
    if total == 0:
        raise UndefinedResultError("WER is undefined for an empty reference corpus")
    return sum(a.errors for a in alignments) / total


def _chars(x: str | Sequence[str]) -> list[str]:
    text = x if isinstance(x, str) else "".join(x)
    return [c for c in text if not c.isspace()]


def cer(ref: str | Sequence[str], hyp: str | Sequence[str]) -> float:
    """Character error rate with all whitespace removed from both sides."""
    return wer(align(_chars(ref), _chars(hyp)))


def char_alignment(ref: str | Sequence[str], hyp: str | Sequence[str]) -> EditAlignment:
    return align(_chars(ref), _chars(hyp))
