"""Readers and writers for the toolkit's external formats.

Formats: RIFF/WAVE PCM16 audio, EMAT binary and CSV matrices, JSONL
utterance manifests and TSV lexicons. Byte layouts are in docs/formats.md.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import string
import struct
import tempfile
import wave
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError

EMAT_MAGIC = b"EMAT"
SPLITS = ("train", "valid", "test")
DEFAULT_TAGS = frozenset({"Noun", "Verb", "Adj", "Adv", "Wh", "Func", "Stop"})
DEFAULT_PUNCTUATION = string.punctuation


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise InputError("audio samples must be one-dimensional")
        if self.sample_rate <= 0:
            raise InputError(f"sample rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise InputError("audio contains non-finite samples")
        if samples.size and np.max(np.abs(samples)) > 1.0:
            raise InputError("audio samples must lie in [-1, 1]")
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def scaled(self, gain: float) -> "AudioBuffer":
        return AudioBuffer(self.samples * gain, self.sample_rate)


@dataclass(frozen=True)
class Matrix:
    """Row-major real matrix with optional column names."""

    values: np.ndarray
    columns: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2:
            raise InputError("matrix values must be two-dimensional")
        if not np.all(np.isfinite(values)):
            raise InputError("matrix contains NaN or Inf")
        if self.columns is not None:
            cols = tuple(self.columns)
            if len(cols) != values.shape[1]:
                raise InputError(
                    f"{len(cols)} column names for {values.shape[1]} columns"
                )
            object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "values", values)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        if self.columns is None or name not in self.columns:
            raise KeyError(name)
        return self.values[:, self.columns.index(name)]


@dataclass(frozen=True)
class UtteranceRecord:
    id: str
    reference_tokens: tuple[str, ...]
    hypothesis_tokens: Mapping[str, tuple[str, ...]]
    emotion_label: str | None = None
    split: str = "test"
    confidences: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    audio_path: str | None = None
    ref_text: str = ""
    hyp_texts: Mapping[str, str] = field(default_factory=dict)


@dataclass
class ClassLexicon:
    entries: dict[str, frozenset[str]]
    tagset: frozenset[str] = DEFAULT_TAGS
    duplicates: int = 0

    def get(self, word: str) -> frozenset[str] | None:
        return self.entries.get(word.casefold())

    def __contains__(self, word: str) -> bool:
        return word.casefold() in self.entries

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class AffectLexicon:
    entries: dict[str, tuple[float, float, float]]
    duplicates: int = 0

    def get(self, word: str) -> tuple[float, float, float] | None:
        return self.entries.get(word.casefold())

    def __contains__(self, word: str) -> bool:
        return word.casefold() in self.entries

    def __len__(self) -> int:
        return len(self.entries)


# --------------------------------------------------------------------- atomic


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    """Write via a sibling temp file and rename, so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# ---------------------------------------------------------------------- audio


def read_wav(path: str | os.PathLike, downmix: bool = False) -> AudioBuffer:
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    try:
        with wave.open(str(path), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            nframes = wf.getnframes()
            raw = wf.readframes(nframes)
    except (wave.Error, EOFError, struct.error) as exc:
        # the stdlib reader rejects non-PCM format tags with wave.Error too
        raise InputError(f"{path}: malformed or unsupported WAV: {exc}") from exc
    if width != 2:
        raise InputError(f"{path}: unsupported bit depth {8 * width} (need 16-bit PCM)")
    if channels > 1 and not downmix:
        raise InputError(f"{path}: {channels} channels; pass downmix to average them")
    data = np.frombuffer(raw, dtype="<i2")
    if data.size != nframes * channels:
        raise InputError(f"{path}: truncated sample data")
    samples = data.astype(np.float64) / 32768.0
    if channels > 1:
        samples = samples.reshape(-1, channels).mean(axis=1)
    return AudioBuffer(samples, rate)


def write_wav(path: str | os.PathLike, audio: AudioBuffer) -> None:
    ints = np.clip(np.round(audio.samples * 32768.0), -32768, 32767).astype("<i2")
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(audio.sample_rate)
        wf.writeframes(ints.tobytes())
    atomic_write_bytes(path, buf.getvalue())


# ------------------------------------------------------------------- matrices


def _is_emat(path: Path) -> bool:
    if path.suffix.lower() == ".emat":
        return True
    with path.open("rb") as fh:
        return fh.read(4) == EMAT_MAGIC


def read_matrix(path: str | os.PathLike) -> Matrix:
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    if _is_emat(path):
        return decode_emat(path.read_bytes(), source=str(path))
    return _read_csv_matrix(path)


def decode_emat(data: bytes, source: str = "<bytes>") -> Matrix:
    if data[:4] != EMAT_MAGIC:
        raise InputError(f"{source}: bad magic {data[:4]!r}, expected {EMAT_MAGIC!r}")
    if len(data) < 12:
        raise InputError(f"{source}: truncated header")
    rows, cols = struct.unpack("<II", data[4:12])
    expected = 12 + 4 * rows * cols
    if len(data) < expected:
        raise InputError(f"{source}: truncated payload ({len(data)} of {expected} bytes)")
    if len(data) > expected:
        raise InputError(f"{source}: {len(data) - expected} trailing bytes")
    values = np.frombuffer(data, dtype="<f4", count=rows * cols, offset=12)
    if not np.all(np.isfinite(values)):
        raise InputError(f"{source}: NaN or Inf cell")
    return Matrix(values.astype(np.float64).reshape(rows, cols))


def encode_emat(matrix: Matrix) -> bytes:
    header = EMAT_MAGIC + struct.pack("<II", matrix.rows, matrix.cols)
    return header + np.ascontiguousarray(matrix.values, dtype="<f4").tobytes()


def _parse_cell(cell: str, where: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise InputError(f"{where}: non-numeric cell {cell!r}") from None
    if not math.isfinite(value):
        raise InputError(f"{where}: NaN or Inf cell")
    return value


def _read_csv_matrix(path: Path) -> Matrix:
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        return Matrix(np.zeros((0, 0)))
    header = None
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        header = tuple(c.strip() for c in rows[0])
        rows = rows[1:]
    width = len(header) if header else len(rows[0])
    values = []
    for lineno, row in enumerate(rows, start=2 if header else 1):
        if len(row) != width:
            raise InputError(f"{path}:{lineno}: expected {width} cells, got {len(row)}")
        values.append([_parse_cell(c.strip(), f"{path}:{lineno}") for c in row])
    arr = np.array(values, dtype=np.float64).reshape(len(values), width)
    return Matrix(arr, header)


def format_matrix_csv(matrix: Matrix, precision: int = 9) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    if matrix.columns is not None:
        writer.writerow(matrix.columns)
    for row in matrix.values:
        writer.writerow([format(float(v), f".{precision}g") for v in row])
    return out.getvalue()


def write_matrix(path: str | os.PathLike, matrix: Matrix) -> None:
    """Write as EMAT when the suffix is ``.emat``, CSV otherwise."""
    path = Path(path)
    if path.suffix.lower() == ".emat":
        atomic_write_bytes(path, encode_emat(matrix))
    else:
        atomic_write_text(path, format_matrix_csv(matrix))


# ------------------------------------------------------------------- manifest


def tokenize(text: str, punctuation: str = DEFAULT_PUNCTUATION) -> list[str]:
    """Lowercase, drop punctuation characters, split on whitespace."""
    table = str.maketrans("", "", punctuation)
    return text.lower().translate(table).split()


def _tokens_of(value, punctuation: str) -> tuple[str, ...]:
    if isinstance(value, str):
        return tuple(tokenize(value, punctuation))
    if isinstance(value, list):
        tokens = []
        for tok in value:
            tokens.extend(tokenize(str(tok), punctuation))
        return tuple(tokens)
    raise InputError(f"expected string or token list, got {type(value).__name__}")


def parse_manifest_lines(
    lines: Iterable[str], punctuation: str = DEFAULT_PUNCTUATION, source: str = "<manifest>"
) -> list[UtteranceRecord]:
    records: list[UtteranceRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        where = f"{source}:{lineno}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"{where}: invalid JSON: {exc.msg}") from None
        if not isinstance(obj, dict) or "id" not in obj or "ref" not in obj:
            raise InputError(f"{where}: record needs at least 'id' and 'ref'")
        uid = str(obj["id"])
        if uid in seen:
            raise InputError(f"{where}: duplicate id {uid!r}")
        seen.add(uid)
        split = obj.get("split", "test")
        if split not in SPLITS:
            raise InputError(f"{where}: unknown split {split!r}")
        hyps_raw = obj.get("hyps", {}) or {}
        if not isinstance(hyps_raw, dict):
            raise InputError(f"{where}: 'hyps' must map system id to transcript")
        hyps = {str(k): _tokens_of(v, punctuation) for k, v in hyps_raw.items()}
        hyp_texts = {
            str(k): v if isinstance(v, str) else " ".join(map(str, v))
            for k, v in hyps_raw.items()
        }
        conf: dict[str, tuple[float, ...]] = {}
        for system, scores in (obj.get("conf") or {}).items():
            if system not in hyps:
                raise InputError(f"{where}: confidences for unknown system {system!r}")
            scores = tuple(float(s) for s in scores)
            if len(scores) != len(hyps[system]):
                raise InputError(
                    f"{where}: {len(scores)} confidences for {len(hyps[system])} "
                    f"hypothesis tokens of system {system!r}"
                )
            conf[system] = scores
        ref = obj["ref"]
        emotion = obj.get("emotion")
        records.append(
            UtteranceRecord(
                id=uid,
                reference_tokens=_tokens_of(ref, punctuation),
                hypothesis_tokens=hyps,
                emotion_label=None if emotion is None else str(emotion),
                split=split,
                confidences=conf,
                audio_path=obj.get("audio"),
                ref_text=ref if isinstance(ref, str) else " ".join(map(str, ref)),
                hyp_texts=hyp_texts,
            )
        )
    return records


def read_manifest(
    path: str | os.PathLike, punctuation: str = DEFAULT_PUNCTUATION
) -> list[UtteranceRecord]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    with path.open(encoding="utf-8") as fh:
        return parse_manifest_lines(fh, punctuation, source=str(path))


# ------------------------------------------------------------------- lexicons


def read_lexicon(
    path: str | os.PathLike, kind: str, tagset: Iterable[str] = DEFAULT_TAGS
) -> ClassLexicon | AffectLexicon:
    """Read a TSV lexicon. ``kind`` is ``"class"`` or ``"affect"``."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    if kind not in ("class", "affect"):
        raise InputError(f"unknown lexicon kind {kind!r}")
    tagset = frozenset(tagset)
    entries: dict = {}
    duplicates = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            where = f"{path}:{lineno}"
            parts = line.split("\t")
            word = parts[0].strip().casefold()
            if kind == "class":
                if len(parts) != 2:
                    raise InputError(f"{where}: expected 'word<TAB>tags'")
                tags = frozenset(t.strip() for t in parts[1].split(",") if t.strip())
                if not tags:
                    raise InputError(f"{where}: empty tag set for {word!r}")
                unknown = tags - tagset
                if unknown:
                    raise InputError(f"{where}: undeclared tags {sorted(unknown)}")
                value = tags
            else:
                if len(parts) != 4:
                    raise InputError(f"{where}: expected 'word<TAB>V<TAB>A<TAB>D'")
                scores = tuple(_parse_cell(p.strip(), where) for p in parts[1:])
                if any(s < 1.0 or s > 9.0 for s in scores):
                    raise InputError(f"{where}: affect score outside [1, 9]")
                value = scores
            if word in entries:
                duplicates += 1
            entries[word] = value
    if kind == "class":
        return ClassLexicon(entries, tagset, duplicates)
    return AffectLexicon(entries, duplicates)


def read_label_csv(path: str | os.PathLike) -> dict[str, str]:
    """Two-column ``id,label`` CSV (header optional) into an ordered dict."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    labels: dict[str, str] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if lineno == 1 and [c.strip().lower() for c in row[:2]] == ["id", "label"]:
                continue
            if len(row) < 2:
                raise InputError(f"{path}:{lineno}: expected 'id,label'")
            uid, label = row[0].strip(), row[1].strip()
            if uid in labels:
                raise InputError(f"{path}:{lineno}: duplicate id {uid!r}")
            labels[uid] = label
    return labels


def format_label_csv(labels: Mapping[str, str | None]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["id", "label"])
    for uid, label in labels.items():
        writer.writerow([uid, "" if label is None else label])
    return out.getvalue()


def read_ids(path: str | os.PathLike) -> list[str]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    ids = [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if len(set(ids)) != len(ids):
        raise InputError(f"{path}: duplicate ids")
    return ids


def format_rows_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else _fmt(v) for v in row])
    return out.getvalue()


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)
