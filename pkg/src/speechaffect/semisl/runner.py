"""File-based semi-supervised runs: load embeddings and label files, split, run, summarise."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..dataio import Matrix, atomic_write_bytes, atomic_write_text, encode_emat, format_label_csv, read_label_csv, read_matrix
from ..errors import InputError
from ..fad import assign_pseudo_label, fit_gaussian, score_table
from .classifier import TrainConfig
from .loop import BASELINES, LoopConfig, run_baselines, run_loop
from .pool import DataPool, PseudoLabelRecord, majority_vote
from .synthetic import SyntheticConfig, make_blob_task

MATRIX_SUFFIXES = (".emat", ".csv")


def _matrix_for(directory: Path, uid: str) -> np.ndarray:
    for suffix in MATRIX_SUFFIXES:
        path = directory / f"{uid}{suffix}"
        if path.exists():
            return read_matrix(path).values
    raise InputError(f"no embedding matrix for id {uid!r} in {directory}")


def load_embeddings(directory: str | Path, ids: Sequence[str]) -> dict[str, np.ndarray]:
    directory = Path(directory)
    if not directory.is_dir():
        raise InputError(f"not a directory: {directory}")
    return {uid: _matrix_for(directory, uid) for uid in ids}


def split_ids(ids: Sequence[str], valid_frac: float, labeled_frac: float, seed: int):
    """Seeded permutation of the sorted ids into (validation, labeled, unlabeled)."""
    if not (0 < valid_frac < 1 and 0 < labeled_frac <= 1):
        raise InputError("split fractions must lie in (0, 1)")
    ordered = sorted(ids)
    perm = np.random.default_rng(seed).permutation(len(ordered))
    n_val = int(round(valid_frac * len(ordered)))
    n_lab = int(round(labeled_frac * (len(ordered) - n_val)))
    pick = [ordered[i] for i in perm]
    return pick[:n_val], pick[n_val:n_val + n_lab], pick[n_val + n_lab:]


def derive_acoustic_labels(
    audio: Mapping[str, np.ndarray],
    labeled: Mapping[str, str],
    unlabeled: Sequence[str],
    shrinkage: float = 0.0,
) -> dict[str, str]:
    """Acoustic pseudo labels as the FAD argmin against per-class pooled embeddings."""
    by_class: dict[str, list[np.ndarray]] = {}
    for uid, cls in labeled.items():
        by_class.setdefault(cls, []).append(audio[uid])
    refs = {cls: {"audio": fit_gaussian(np.vstack(rows), shrinkage)} for cls, rows in sorted(by_class.items())}
    out = {}
    for uid in unlabeled:
        table = score_table(refs, {"audio": fit_gaussian(audio[uid], shrinkage)})
        out[uid] = assign_pseudo_label(table).label
    return out


def linguistic_labels(paths: Sequence[str], vote: bool) -> dict[str, str | None]:
    if not paths:
        return {}
    if len(paths) > 1 and not vote:
        raise InputError("several linguistic label files given; pass --vote to combine them")
    sets = [{k: (v or None) for k, v in read_label_csv(p).items()} for p in paths]
    return sets[0] if len(sets) == 1 else majority_vote(sets)


@dataclass
class RunOutput:
    history_csv: str
    metrics: dict


def loop_config(sec, seed: int) -> LoopConfig:
    train = TrainConfig(learning_rate=sec.learning_rate, epochs=sec.epochs, l2=sec.l2, seed=seed)
    return LoopConfig(sec.max_iters, sec.patience, sec.removal_rate, sec.threshold, seed, train)


def run_from_config(sec, seed: int, derive_acoustic: bool = False, vote: bool = False,
                    shrinkage: float = 0.0) -> RunOutput:
    """``sec`` is the ``[semisl]`` section of a run config."""
    for attr in ("audio_features", "text_features", "gold_labels"):
        if not getattr(sec, attr):
            raise InputError(f"semisl.{attr} is required")
    gold = read_label_csv(sec.gold_labels)
    if not gold:
        raise InputError("gold label file is empty")
    ids = sorted(gold)
    classes = tuple(sorted(set(gold.values())))
    audio = load_embeddings(sec.audio_features, ids)
    text = load_embeddings(sec.text_features, ids)
    view_a = np.vstack([audio[i].mean(axis=0) for i in ids])
    view_b = np.vstack([text[i].mean(axis=0) for i in ids])

    val_ids, lab_ids, unl_ids = split_ids(ids, sec.valid_frac, sec.labeled_frac, seed)
    labeled = {i: gold[i] for i in lab_ids}
    if derive_acoustic:
        acoustic = derive_acoustic_labels(audio, labeled, unl_ids, shrinkage)
    elif sec.acoustic_labels:
        acoustic = read_label_csv(sec.acoustic_labels)
    else:
        raise InputError("need semisl.acoustic_labels or --derive-acoustic")
    linguistic = linguistic_labels(sec.linguistic_labels, vote)
    missing = [i for i in unl_ids if not acoustic.get(i)]
    if missing:
        raise InputError(f"{len(missing)} unlabeled ids lack an acoustic label, e.g. {missing[0]!r}")
    records = [PseudoLabelRecord(i, acoustic[i], linguistic.get(i)) for i in unl_ids]
    bad = sorted({c for r in records for c in (r.acoustic, r.linguistic) if c is not None and c not in classes})
    if bad:
        raise InputError(f"pseudo labels outside the gold class set: {bad}")

    pool = DataPool.from_records(
        ids, np.hstack([view_a, view_b]), labeled, {i: gold[i] for i in val_ids}, records, classes,
        gold={i: gold[i] for i in unl_ids}, views=(view_a, view_b),
    )
    cfg = loop_config(sec, seed)
    result = run_loop(pool, records, cfg)
    hist = result.history
    baselines = {}
    for kind in sec.baselines:
        if kind not in BASELINES:
            raise InputError(f"unknown baseline {kind!r}")
        baselines[kind] = run_baselines(pool, cfg, kind).as_dict()
    metrics = {
        "kind": "semisl",
        "seed": seed,
        "classes": list(classes),
        "sizes": {
            "labeled": len(lab_ids),
            "validation": len(val_ids),
            "unlabeled": len(unl_ids),
            "initial_high_conf": len(pool.high_conf),
        },
        "loop": {
            "best_ua": hist.best_ua,
            "best_iteration": hist.best_index,
            "last_ua": hist.last_ua,
            "iterations": len(hist),
            "stop_reason": hist.stop_reason,
            "promoted": len(result.promoted_labels),
        },
        "baselines": baselines,
    }
    return RunOutput(hist.to_csv(), metrics)


def write_synthetic_run(out_dir: str | Path, cfg: SyntheticConfig = SyntheticConfig(),
                        rows_per_item: int = 4) -> Path:
    """Materialise a blob task as embedding files, label CSVs and a run.toml; returns the toml path.

    Each item's embedding matrix has ``rows_per_item`` rows whose mean is the blob point.
    """
    out = Path(out_dir)
    task = make_blob_task(cfg)
    rng = np.random.default_rng(cfg.seed + 1)
    pool = task.pool
    for v, name in enumerate(("audio", "text")):
        (out / name).mkdir(parents=True, exist_ok=True)
        for uid in pool.ids:
            point = pool.views[v][pool.index[uid]]
            jitter = rng.normal(size=(rows_per_item, point.size))
            rows = point + jitter - jitter.mean(axis=0)
            atomic_write_bytes(out / name / f"{uid}.emat", encode_emat(Matrix(rows)))
    ids = sorted(pool.ids)
    atomic_write_text(out / "gold.csv", format_label_csv({i: task.gold[i] for i in ids}))
    # pseudo labels for every id so any seeded split finds them
    k = cfg.n_classes
    idx = {c: i for i, c in enumerate(pool.classes)}
    y = np.array([idx[task.gold[i]] for i in ids])
    flips = []
    for rate in (cfg.acoustic_noise, cfg.linguistic_noise):
        flip = rng.random(y.size) < rate
        flips.append(np.where(flip, (y + rng.integers(1, k, size=y.size)) % k, y))
    atomic_write_text(out / "acoustic.csv", format_label_csv({i: pool.classes[c] for i, c in zip(ids, flips[0])}))
    atomic_write_text(out / "linguistic.csv", format_label_csv({i: pool.classes[c] for i, c in zip(ids, flips[1])}))
    toml = (
        f"seed = {cfg.seed}\n\n[semisl]\n"
        'audio_features = "audio"\ntext_features = "text"\ngold_labels = "gold.csv"\n'
        'acoustic_labels = "acoustic.csv"\nlinguistic_labels = ["linguistic.csv"]\n'
        f"valid_frac = {cfg.valid_frac}\nlabeled_frac = {cfg.labeled_frac}\n"
        'baselines = ["supervised_limited", "decision_merging"]\n'
    )
    atomic_write_text(out / "run.toml", toml)
    return out / "run.toml"
