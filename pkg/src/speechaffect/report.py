"""Consolidated report over artifacts written by the other subcommands."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, Sequence

from . import __version__
from .dataio import format_rows_csv
from .errors import InputError

KINDS = ("asr_eval", "fad_label", "metrics", "probe", "semisl")


def load_artifact(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise InputError(f"missing upstream file: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict) or data.get("kind") not in KINDS:
        raise InputError(f"{path}: not a recognised artifact (kind must be one of {KINDS})")
    return data


def build_report(artifacts: Sequence[Mapping], config: Mapping | None = None) -> dict:
    """Group artifacts by kind. ASR systems are keyed by name; an empty corpus is an error."""
    if not artifacts:
        raise InputError("report needs at least one input artifact")
    sections: dict[str, list] = {}
    systems: dict[str, dict] = {}
    for art in artifacts:
        kind = art["kind"]
        if kind == "asr_eval":
            if not art.get("utterances"):
                raise InputError(f"ASR artifact for {art.get('system')!r} covers an empty corpus")
            name = art["system"]
            if name in systems:
                raise InputError(f"system {name!r} appears twice")
            systems[name] = dict(art)
        else:
            sections.setdefault(kind, []).append(dict(art))
    report: dict = {"version": __version__, "config": dict(config or {})}
    if systems:
        report["systems"] = {k: systems[k] for k in sorted(systems)}
    report.update(sections)
    return report


def dumps_report(report: Mapping) -> str:
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def report_tables(report: Mapping) -> dict[str, str]:
    """Plot-ready CSV tables: word-class stats, length bins and FAD grids."""
    tables: dict[str, str] = {}
    systems = report.get("systems", {})
    class_rows, length_rows = [], []
    for name, block in systems.items():
        for row in block.get("class_stats", []):
            class_rows.append([name, row["class"], row["WR"], row["ER"], row["CR"]])
        for row in block.get("length_bins", []):
            length_rows.append([name, row["bin"], row["utterances"], row["wer"]])
    if class_rows:
        tables["class_stats.csv"] = format_rows_csv(["system", "class", "WR", "ER", "CR"], class_rows)
    if length_rows:
        tables["length_bins.csv"] = format_rows_csv(["system", "bin", "utterances", "wer"], length_rows)
    fad_rows = []
    for i, art in enumerate(report.get("fad_label", [])):
        for enc, scores in art["table"].items():
            for cls, value in scores.items():
                fad_rows.append([art.get("id", i), enc, cls, value])
    if fad_rows:
        tables["fad_scores.csv"] = format_rows_csv(["id", "encoder", "class", "fad"], fad_rows)
    return tables
