"""Pseudo-label records, multi-view agreement and the training pool."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..errors import InputError


@dataclass(frozen=True)
class PseudoLabelRecord:
    id: str
    acoustic: str
    linguistic: str | None = None
    model: str | None = None


def majority_vote(label_sets: Sequence[Mapping[str, str | None]]) -> dict[str, str | None]:
    """Strict majority of the votes cast per id; no majority (including ties) gives None."""
    if not label_sets:
        raise InputError("majority_vote needs at least one label set")
    ids = sorted(set().union(*label_sets))
    out: dict[str, str | None] = {}
    for uid in ids:
        votes = Counter(s[uid] for s in label_sets if s.get(uid) is not None)
        total = sum(votes.values())
        winner = None
        for cls, count in votes.items():
            if 2 * count > total:
                winner = cls
        out[uid] = winner
    return out


def select_high_confidence(
    records: Iterable[PseudoLabelRecord],
) -> tuple[dict[str, str], list[str]]:
    """High confidence when both views agree. Output is sorted by id."""
    high: dict[str, str] = {}
    low: list[str] = []
    for rec in sorted(records, key=lambda r: r.id):
        if rec.acoustic is None:
            raise InputError(f"record {rec.id!r} has no acoustic label")
        if rec.linguistic is not None and rec.linguistic == rec.acoustic:
            high[rec.id] = rec.acoustic
        else:
            low.append(rec.id)
    return high, low


@dataclass
class DataPool:
    """Feature rows keyed by id plus the four disjoint id sets the loop works on."""

    ids: list[str]
    features: np.ndarray
    labeled: dict[str, str]
    high_conf: dict[str, str]
    low_conf: list[str]
    validation: dict[str, str]
    classes: tuple[str, ...]
    initial_high_conf_ids: frozenset = frozenset()
    gold: dict[str, str] = field(default_factory=dict)
    views: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2 or self.features.shape[0] != len(self.ids):
            raise InputError(f"{self.features.shape} features for {len(self.ids)} ids")
        if len(set(self.ids)) != len(self.ids):
            raise InputError("duplicate ids in pool")
        self.index = {uid: i for i, uid in enumerate(self.ids)}
        self.classes = tuple(self.classes)
        sets = {
            "labeled": set(self.labeled),
            "high_conf": set(self.high_conf),
            "low_conf": set(self.low_conf),
            "validation": set(self.validation),
        }
        names = list(sets)
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                common = sets[a] & sets[b]
                if common:
                    raise InputError(f"{a} and {b} share ids {sorted(common)[:5]}")
            unknown = sets[a] - set(self.index)
            if unknown:
                raise InputError(f"{a} ids without features: {sorted(unknown)[:5]}")
        for name, mapping in (("labeled", self.labeled), ("high_conf", self.high_conf),
                              ("validation", self.validation)):
            bad = sorted({c for c in mapping.values() if c not in self.classes})
            if bad:
                raise InputError(f"{name} uses undeclared classes {bad}")
        if not self.initial_high_conf_ids:
            self.initial_high_conf_ids = frozenset(self.high_conf)
        self.low_conf = sorted(self.low_conf)
        if self.views is not None:
            a, b = (np.asarray(v, dtype=float) for v in self.views)
            if a.shape[0] != len(self.ids) or b.shape[0] != len(self.ids):
                raise InputError("view matrices must have one row per id")
            self.views = (a, b)

    @classmethod
    def from_records(
        cls,
        ids: Sequence[str],
        features: np.ndarray,
        labeled: Mapping[str, str],
        validation: Mapping[str, str],
        records: Iterable[PseudoLabelRecord],
        classes: Sequence[str],
        gold: Mapping[str, str] | None = None,
        views: tuple[np.ndarray, np.ndarray] | None = None,
    ) -> "DataPool":
        high, low = select_high_confidence(records)
        return cls(list(ids), features, dict(labeled), high, low, dict(validation),
                   tuple(classes), frozenset(high), dict(gold or {}), views)

    def rows(self, ids: Sequence[str], view: int | None = None) -> np.ndarray:
        source = self.features if view is None else self.views[view]
        return source[[self.index[i] for i in ids]]

    @property
    def unlabeled_ids(self) -> list[str]:
        return sorted(set(self.high_conf) | set(self.low_conf))
