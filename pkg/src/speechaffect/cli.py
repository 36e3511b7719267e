"""Command-line entry point. Every subcommand reads files and writes JSON/CSV atomically."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .dataio import (
    Matrix,
    atomic_write_text,
    format_matrix_csv,
    format_rows_csv,
    read_lexicon,
    read_manifest,
    read_matrix,
    read_wav,
)
from .errors import InputError, InvariantError


class UsageError(InputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _emit_config(cfg: RunConfig, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / "resolved_config.toml", cfg.to_toml())


def _workers(cfg: RunConfig) -> int:
    return cfg.workers if cfg.workers > 0 else (os.cpu_count() or 1)


# ------------------------------------------------------------------ features


def _extract_one(job: tuple[str, str, dict]) -> str:
    from .features import ExtractionConfig, FrameConfig, extract_features

    wav, out, fcfg = job
    frame = FrameConfig(fcfg["frame_len_ms"], fcfg["hop_ms"], fcfg["window"])
    ecfg = ExtractionConfig(frame, fcfg["f0_min"], fcfg["f0_max"], fcfg["voicing_threshold"])
    fm = extract_features(read_wav(wav, downmix=True), ecfg)
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_path, format_matrix_csv(fm.matrix))
    atomic_write_text(out_path.with_suffix(".json"), fm.sidecar_json())
    return str(out_path)


def cmd_features(args, cfg: RunConfig) -> dict:
    wavs = args.wav
    if args.out and len(wavs) > 1:
        raise InputError("--out takes a single --wav; use --out-dir for several files")
    if not args.out and not args.out_dir:
        raise InputError("need --out or --out-dir")
    fcfg = cfg.to_dict()["features"]
    if args.out:
        jobs = [(wavs[0], args.out, fcfg)]
    else:
        jobs = [(w, str(Path(args.out_dir) / (Path(w).stem + ".features.csv")), fcfg) for w in wavs]
    for w, _, _ in jobs:
        if not Path(w).exists():
            raise InputError(f"no such file: {w}")
    n = min(_workers(cfg), len(jobs))
    if n > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            outputs = list(pool.map(_extract_one, jobs))
    else:
        outputs = [_extract_one(j) for j in jobs]
    _emit_config(cfg, Path(outputs[0]).parent)
    return {"written": outputs}


# --------------------------------------------------------------------- probe


def _matrices(paths: Sequence[str]) -> list[np.ndarray]:
    return [read_matrix(p).values for p in paths]


def cmd_probe(args, cfg: RunConfig) -> dict:
    from . import probe
    from .features import hierarchy

    pc = cfg.probe
    out_dir = Path(args.out_dir)
    result: dict = {"kind": "probe", "mode": args.mode, "reduction": pc.reduction}
    if args.mode == "sweep":
        if not args.layers or not args.features:
            raise InputError("sweep needs --layers and --features")
        sweep = probe.layer_similarity_sweep(_matrices(args.layers), read_matrix(args.features).values,
                                             pc.reg, pc.reduction)
        result["scores"] = {str(k): v for k, v in sweep.scores.items()}
        csv = format_rows_csv(["layer", "similarity"], sorted(sweep.scores.items()))
    elif args.mode == "pairwise":
        if not args.layers:
            raise InputError("pairwise needs --layers")
        grid = probe.pairwise_layer_correlation(_matrices(args.layers), pc.reg, pc.reduction)
        result["matrix"] = grid.tolist()
        csv = format_matrix_csv(Matrix(grid, tuple(f"layer_{i}" for i in range(grid.shape[0]))))
    elif args.mode == "hier":
        if not args.reps or not args.features:
            raise InputError("hier needs --reps and --features (frame level)")
        frame, phone, word = hierarchy(read_matrix(args.features))
        reps = read_matrix(args.reps).values
        d_phone, d_word = probe.hierarchical_cca_diff(reps, frame.values, phone.values, word.values,
                                                      pc.reg, pc.reduction)
        result["phone_minus_frame"], result["word_minus_phone"] = d_phone, d_word
        csv = format_rows_csv(["step", "difference"], [["phone-frame", d_phone], ["word-phone", d_word]])
    else:
        if not args.reps_dir or not args.features_dir or not args.labels:
            raise InputError("emotion needs --reps-dir, --features-dir and --labels")
        from .dataio import read_label_csv
        from .semisl.runner import load_embeddings

        labels = read_label_csv(args.labels)
        reps = load_embeddings(args.reps_dir, list(labels))
        feats = load_embeddings(args.features_dir, list(labels))
        reps_by, feats_by = {}, {}
        for uid, cls in labels.items():
            x, y = probe.align_rows(reps[uid], feats[uid])
            reps_by.setdefault(cls, []).append(x)
            feats_by.setdefault(cls, []).append(y)
        res = probe.emotion_conditioned_cca(
            {c: probe.pool_rows(v) for c, v in reps_by.items()},
            {c: probe.pool_rows(v) for c, v in feats_by.items()},
            pc.min_rows, pc.reg, pc.reduction,
        )
        result["scores"], result["absent"] = res.scores, res.absent
        csv = format_rows_csv(["emotion", "similarity"], sorted(res.scores.items()))
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / f"probe_{args.mode}.json", _dump(result))
    atomic_write_text(out_dir / f"probe_{args.mode}.csv", csv)
    _emit_config(cfg, out_dir)
    return result


# ----------------------------------------------------------------------- asr


def cmd_asr(args, cfg: RunConfig) -> dict:
    from .asr import evaluate_system

    records = read_manifest(args.manifest)
    if not records:
        raise InputError("manifest is empty")
    systems = args.systems.split(",") if args.systems else sorted({s for r in records for s in r.hypothesis_tokens})
    if not systems:
        raise InputError("manifest has no hypotheses")
    cls_lex = read_lexicon(args.class_lexicon, "class") if args.class_lexicon else None
    aff_lex = read_lexicon(args.affect_lexicon, "affect") if args.affect_lexicon else None
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {}
    for system in systems:
        rep = evaluate_system(records, system, cls_lex, aff_lex, cfg.asr.smooth_bleu, cfg.asr.per_utterance_mean)
        rep = {"kind": "asr_eval", **rep}
        atomic_write_text(out_dir / f"asr_{system}.json", _dump(rep))
        atomic_write_text(out_dir / f"asr_{system}_length_bins.csv", format_rows_csv(
            ["bin", "utterances", "ratio", "wer"],
            [[r["bin"], r["utterances"], r["ratio"], r["wer"]] for r in rep["length_bins"]]))
        if "class_stats" in rep:
            atomic_write_text(out_dir / f"asr_{system}_class_stats.csv", format_rows_csv(
                ["class", "words", "errors", "WR", "ER", "CR"],
                [[r["class"], r["words"], r["errors"], r["WR"], r["ER"], r["CR"]] for r in rep["class_stats"]]))
        summary[system] = {"wer": rep["wer"], "bleu": rep["bleu"], "gleu": rep["gleu"]}
    _emit_config(cfg, out_dir)
    return summary


# ------------------------------------------------------------------- metrics


def cmd_metrics(args, cfg: RunConfig) -> dict:
    import csv

    from .metrics import acc_from_scores, classification_report, regression_report

    path = Path(args.input)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.DictReader(fh)]
    if not rows or not {"id", "pred", "target"} <= set(rows[0]):
        raise InputError(f"{path}: expected columns id,pred,target")
    preds = [r["pred"] for r in rows]
    targets = [r["target"] for r in rows]
    if args.task == "regression":
        try:
            p, t = [float(v) for v in preds], [float(v) for v in targets]
        except ValueError as exc:
            raise InputError(f"non-numeric value: {exc}") from None
        report = regression_report(p, t)
        if all(-3 <= v <= 3 for v in t):
            report["acc7"] = acc_from_scores(p, t, "acc7")
            report["acc2"] = acc_from_scores(p, t, "acc2")
    else:
        report = classification_report(targets, preds)
    report = {"kind": "metrics", "task": args.task, **report}
    if args.out:
        atomic_write_text(Path(args.out), _dump(report))
    return report


# ----------------------------------------------------------------------- fad


def _fad_inputs(args, cfg: RunConfig):
    from .fad import fit_gaussian

    encoders = [e for e in args.encoders.split(",") if e]
    if not encoders:
        raise InputError("--encoders is empty")
    shrink = cfg.fad.shrinkage
    labeled_dir = Path(args.labeled)
    if not labeled_dir.is_dir():
        raise InputError(f"not a directory: {labeled_dir}")
    labeled = {}
    for cls_dir in sorted(p for p in labeled_dir.iterdir() if p.is_dir()):
        labeled[cls_dir.name] = {e: fit_gaussian(read_matrix(cls_dir / f"{e}.emat"), shrink) for e in encoders}
    if not labeled:
        raise InputError(f"{labeled_dir} has no class subdirectories")
    u = args.unlabeled
    if "{encoder}" in u:
        paths = {e: u.replace("{encoder}", e) for e in encoders}
    elif Path(u).is_dir():
        paths = {e: str(Path(u) / f"{e}.emat") for e in encoders}
    else:
        if len(encoders) > 1:
            raise InputError("a single unlabeled file needs a single encoder; use a directory or {encoder}")
        paths = {encoders[0]: u}
    unlabeled = {e: fit_gaussian(read_matrix(p), shrink) for e, p in paths.items()}
    return labeled, unlabeled


def cmd_fad(args, cfg: RunConfig) -> dict:
    from .fad import FadScoreTable, assign_pseudo_label, score_table

    if args.scores:
        grid = json.loads(Path(args.scores).read_text(encoding="utf-8")) if Path(args.scores).exists() else None
        if grid is None:
            raise InputError(f"no such file: {args.scores}")
        table = FadScoreTable.from_grid(grid)
    else:
        if not args.labeled or not args.unlabeled or not args.encoders:
            raise InputError("need --labeled, --unlabeled and --encoders (or --scores)")
        table = score_table(*_fad_inputs(args, cfg))
    result = {"kind": "fad_label", **table.as_dict()}
    if args.id:
        result["id"] = args.id
    if args.action == "label":
        pl = assign_pseudo_label(table, cfg.fad.normalized)
        result.update(label=pl.label, tie=pl.tie, score=pl.score)
    if args.out:
        atomic_write_text(Path(args.out), _dump(result))
        _emit_config(cfg, Path(args.out).parent)
    return result


# -------------------------------------------------------------------- semisl


def cmd_semisl(args, cfg: RunConfig) -> dict:
    from .semisl.runner import SyntheticConfig, run_from_config, write_synthetic_run

    out_dir = Path(args.out_dir)
    if args.action == "synth":
        path = write_synthetic_run(out_dir, SyntheticConfig(seed=cfg.seed, n_points=args.points))
        return {"config": str(path)}
    if not args.config:
        raise InputError("semisl run needs --config")
    out = run_from_config(cfg.semisl, cfg.seed, args.derive_acoustic, args.vote, cfg.fad.shrinkage)
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / "history.csv", out.history_csv)
    atomic_write_text(out_dir / "metrics.json", _dump(out.metrics))
    _emit_config(cfg, out_dir)
    return out.metrics["loop"]


# -------------------------------------------------------------------- report


def cmd_report(args, cfg: RunConfig) -> dict:
    from .report import build_report, dumps_report, load_artifact, report_tables

    report = build_report([load_artifact(p) for p in args.inputs], cfg.to_dict())
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / "report.json", dumps_report(report))
    for name, text in report_tables(report).items():
        atomic_write_text(out_dir / name, text)
    return {"systems": sorted(report.get("systems", {})), "written": str(out_dir / "report.json")}


def cmd_selftest(args, cfg: RunConfig) -> dict:
    from .selftest import run_selftest

    results = run_selftest()
    for r in results:
        print(r.line())
    if not all(r.passed for r in results):
        raise InvariantError("selftest failed: " + ", ".join(r.name for r in results if not r.passed))
    return {"passed": len(results)}


# ------------------------------------------------------------------- parsing


def build_parser() -> argparse.ArgumentParser:
    def common(default):
        c = _Parser(add_help=False, argument_default=default)
        c.add_argument("--config", help="TOML run config")
        c.add_argument("--seed", type=int, help="override the config seed")
        c.add_argument("--workers", type=int, help="worker pool size (default: logical cores)")
        c.add_argument("--quiet", action="store_true", help="do not print the JSON summary")
        return c

    p = _Parser(prog="speechaffect", description="Speech affect analysis toolkit", parents=[common(None)])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    # options are accepted before or after the subcommand
    shared = common(argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **k: _add(*a, parents=[shared], **k)

    f = sub.add_parser("features", help="frame-level acoustic features")
    f.add_argument("action", choices=["extract"])
    f.add_argument("--wav", nargs="+", required=True)
    f.add_argument("--out")
    f.add_argument("--out-dir")
    f.add_argument("--frame-len-ms", type=float)
    f.add_argument("--hop-ms", type=float)
    f.add_argument("--f0-min", type=float)
    f.add_argument("--f0-max", type=float)

    pr = sub.add_parser("probe", help="CCA similarity probes")
    pr.add_argument("mode", choices=["sweep", "pairwise", "hier", "emotion"])
    pr.add_argument("--layers", nargs="+")
    pr.add_argument("--features")
    pr.add_argument("--reps")
    pr.add_argument("--reps-dir")
    pr.add_argument("--features-dir")
    pr.add_argument("--labels")
    pr.add_argument("--reduction", choices=["mean", "top1"])
    pr.add_argument("--out-dir", required=True)

    a = sub.add_parser("asr", help="transcript quality and error analytics")
    a.add_argument("action", choices=["eval"])
    a.add_argument("--manifest", required=True)
    a.add_argument("--systems", help="comma-separated system ids (default: all)")
    a.add_argument("--class-lexicon")
    a.add_argument("--affect-lexicon")
    a.add_argument("--smooth-bleu", action="store_true", default=None)
    a.add_argument("--out-dir", required=True)

    m = sub.add_parser("metrics", help="classification or regression metrics from id,pred,target CSV")
    m.add_argument("--input", required=True)
    m.add_argument("--task", choices=["classification", "regression"], default="classification")
    m.add_argument("--out")

    fd = sub.add_parser("fad", help="FAD score tables and pseudo labels")
    fd.add_argument("action", choices=["score", "label"])
    fd.add_argument("--labeled", help="directory of <class>/<encoder>.emat")
    fd.add_argument("--unlabeled", help="directory, path template with {encoder}, or a single file")
    fd.add_argument("--encoders", help="comma-separated encoder names")
    fd.add_argument("--scores", help="JSON grid {encoder: {class: score}} instead of embeddings")
    fd.add_argument("--shrinkage", type=float)
    fd.add_argument("--normalized", action="store_true", default=None)
    fd.add_argument("--id")
    fd.add_argument("--out")

    s = sub.add_parser("semisl", help="multi-view semi-supervised training")
    s.add_argument("action", choices=["run", "synth"])
    s.add_argument("--derive-acoustic", action="store_true")
    s.add_argument("--vote", action="store_true")
    s.add_argument("--points", type=int, default=1000)
    s.add_argument("--out-dir", required=True)

    r = sub.add_parser("report", help="consolidate artifacts into one report")
    r.add_argument("--inputs", nargs="+", required=True)
    r.add_argument("--out-dir", required=True)

    sub.add_parser("selftest", help="run the bundled oracle checks")
    return p


HANDLERS = {
    "features": cmd_features, "probe": cmd_probe, "asr": cmd_asr, "metrics": cmd_metrics,
    "fad": cmd_fad, "semisl": cmd_semisl, "report": cmd_report, "selftest": cmd_selftest,
}


def _overrides(args) -> dict:
    get = lambda name: getattr(args, name, None)  # noqa: E731
    return {
        "seed": args.seed,
        "workers": args.workers,
        "features.frame_len_ms": get("frame_len_ms"),
        "features.hop_ms": get("hop_ms"),
        "features.f0_min": get("f0_min"),
        "features.f0_max": get("f0_max"),
        "probe.reduction": get("reduction"),
        "asr.smooth_bleu": get("smooth_bleu"),
        "fad.shrinkage": get("shrinkage"),
        "fad.normalized": get("normalized"),
    }


def _fail(kind: str, exc: BaseException, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}) + "\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args.config, _overrides(args))
        result = HANDLERS[args.command](args, cfg)
        if not args.quiet and args.command != "selftest":
            sys.stdout.write(_dump(result))
        return 0
    except InvariantError as exc:
        return _fail("invariant", exc, 2)
    except UsageError as exc:
        return _fail("usage", exc, 1)
    except (InputError, FileNotFoundError, KeyError) as exc:
        return _fail("input", exc, 1)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
