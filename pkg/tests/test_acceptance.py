"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the pytest terminal summary (see conftest.py) and
also echoed to stdout, visible with ``pytest -s``.
"""

from __future__ import annotations

import math
import subprocess
import sys
import time
from contextlib import contextmanager
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest
from scipy.linalg import eigh
from scipy.signal import lfilter, sawtooth
from scipy.stats import ortho_group

from speechaffect.asr import (
    INSERTION,
    ScoredUtterance,
    align,
    brevity_penalty,
    class_stats,
    corpus_bleu,
    gleu,
    length_binned_wer,
)
from speechaffect.dataio import AudioBuffer
from speechaffect.fad import FadScoreTable, GaussianStats, assign_pseudo_label, fit_gaussian, frechet_distance
from speechaffect.features import (
    FrameConfig,
    formants_lpc,
    frame_signal,
    jitter_shimmer,
    raw_frames,
    spectral_descriptors,
    track_pitch,
)
from speechaffect.metrics import ConfusionCounts, ccc, unweighted_accuracy, weighted_accuracy
from speechaffect.probe import cca, cca_generalized_eig
from speechaffect.semisl import (
    LoopConfig,
    SyntheticConfig,
    loss_and_grad,
    make_blob_task,
    merged_confident,
    run_baselines,
    run_loop,
)

from conftest import ACCEPTANCE_LINES, tone

SR = 16000


@contextmanager
def criterion(number: int, title: str, budget: float | None = None):
    """Record one PASS/FAIL line; fail the test if the body raises or the budget is exceeded."""
    state = {"detail": ""}
    start = time.perf_counter()
    passed = False
    try:
        yield state
        passed = True
    finally:
        elapsed = time.perf_counter() - start
        over = budget is not None and elapsed >= budget
        ok = passed and not over
        extra = f"; over budget {budget:g}s" if over else ""
        budget_txt = f", budget {budget:g}s" if budget is not None else ""
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {state['detail']}{extra} ({elapsed:.2f}s{budget_txt})"
        ACCEPTANCE_LINES.append(line)
        print(line)
    assert not over, f"criterion {number} took {elapsed:.2f}s, budget {budget}s"


# ----------------------------------------------------------------- oracles


def exhaustive_edit_distance(ref: tuple, hyp: tuple) -> int:
    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(ref) or j == len(hyp):
            return (len(ref) - i) + (len(hyp) - j)
        return min(go(i + 1, j + 1) + (ref[i] != hyp[j]), go(i + 1, j) + 1, go(i, j + 1) + 1)

    return go(0, 0)


def canonical_correlations_eig(x, y, reg):
    """sqrt of eig(Kxx^-1 Sxy Kyy^-1 Syx): a different route from both package implementations."""
    xc, yc = x - x.mean(0), y - y.mean(0)
    n = x.shape[0]
    kxx = xc.T @ xc / n + reg * np.eye(x.shape[1])
    kyy = yc.T @ yc / n + reg * np.eye(y.shape[1])
    sxy = xc.T @ yc / n
    m = np.linalg.solve(kxx, sxy) @ np.linalg.solve(kyy, sxy.T)
    vals = np.sort(np.clip(np.linalg.eigvals(m).real, 0, None))[::-1]
    return np.sqrt(vals[: min(x.shape[1], y.shape[1])])


def canonical_correlations_pencil(x, y, reg):
    p, q = x.shape[1], y.shape[1]
    z = np.hstack([x - x.mean(0), y - y.mean(0)])
    s = z.T @ z / x.shape[0]
    a = np.zeros_like(s)
    a[:p, p:], a[p:, :p] = s[:p, p:], s[p:, :p]
    b = np.zeros_like(s)
    b[:p, :p] = s[:p, :p] + reg * np.eye(p)
    b[p:, p:] = s[p:, p:] + reg * np.eye(q)
    return np.sort(eigh(a, b, eigvals_only=True))[::-1][: min(p, q)]


def count_ngrams(tokens, n):
    out = {}
    for i in range(len(tokens) - n + 1):
        key = tuple(tokens[i:i + n])
        out[key] = out.get(key, 0) + 1
    return out


def gleu_by_hand(ref, hyp):
    m = h = r = 0
    for n in range(1, 5):
        hc, rc = count_ngrams(hyp, n), count_ngrams(ref, n)
        m += sum(min(c, rc.get(k, 0)) for k, c in hc.items())
        h += sum(hc.values())
        r += sum(rc.values())
    return min(Fraction(m, h), Fraction(m, r))


# ---------------------------------------------------------------- criteria


def test_c01_edit_distance_oracle():
    with criterion(1, "edit distance vs exhaustive recursion", 5.0) as st:
        rng = np.random.default_rng(2024)
        vocab = list("wxyz")
        mismatches = 0
        for _ in range(1000):
            ref = tuple(rng.choice(vocab, size=rng.integers(0, 9)))
            hyp = tuple(rng.choice(vocab, size=rng.integers(0, 9)))
            a = align(list(ref), list(hyp))
            mismatches += (a.S + a.D + a.I) != exhaustive_edit_distance(ref, hyp)
        st["detail"] = f"{1000 - mismatches}/1000 exact"
        assert mismatches == 0


def test_c02_fad_closed_forms():
    with criterion(2, "FAD closed forms", 2.0) as st:
        rng = np.random.default_rng(7)
        closed = ident = sym = rot = 0.0
        for case in range(200):
            d = 1 if case < 100 else int(rng.integers(2, 7))
            ma, mb = rng.normal(size=d) * 3, rng.normal(size=d) * 3
            sa, sb = rng.uniform(0.05, 4, d), rng.uniform(0.05, 4, d)
            a = GaussianStats(ma, np.diag(sa ** 2), 10)
            b = GaussianStats(mb, np.diag(sb ** 2), 10)
            expected = math.fsum((ma - mb) ** 2) + math.fsum((sa - sb) ** 2)
            got = frechet_distance(a, b)
            closed = max(closed, abs(got - expected))
            sym = max(sym, abs(got - frechet_distance(b, a)))
            full = fit_gaussian(rng.normal(size=(60, d)) @ rng.normal(size=(d, d)))
            ident = max(ident, abs(frechet_distance(full, full)))
            q = ortho_group.rvs(d, random_state=rng) if d > 1 else np.array([[-1.0]])
            other = fit_gaussian(rng.normal(size=(60, d)) + 1.0)
            base = frechet_distance(full, other)
            turned = frechet_distance(GaussianStats(q @ full.mean, q @ full.cov @ q.T, 60),
                                      GaussianStats(q @ other.mean, q @ other.cov @ q.T, 60))
            rot = max(rot, abs(turned - base))
        st["detail"] = f"closed {closed:.1e}, identity {ident:.1e}, symmetry {sym:.1e}, rotation {rot:.1e}"
        assert closed <= 1e-9 and ident <= 1e-8 and sym <= 1e-8 and rot <= 1e-6


def test_c03_fad_grid_argmin(fad_grid):
    with criterion(3, "FAD grid average argmin") as st:
        table = FadScoreTable.from_grid(fad_grid)
        label = assign_pseudo_label(table)
        by_hand = {c: sum(fad_grid[e][c] for e in fad_grid) / len(fad_grid) for c in table.classes}
        st["detail"] = f"label {label.label}, Angry average {by_hand['Angry']:.4f}"
        assert label.label == "Angry" and not label.tie
        assert min(by_hand, key=by_hand.get) == "Angry"
        np.testing.assert_allclose(table.average, [by_hand[c] for c in table.classes], rtol=0, atol=1e-12)


def test_c04_cca_identities():
    with criterion(4, "CCA identities", 10.0) as st:
        rng = np.random.default_rng(11)
        x = rng.normal(size=(400, 5))
        self_err = abs(cca(x, x).similarity - 1.0)
        affine = 0.0
        for _ in range(50):
            y = rng.normal(size=(300, 4))
            t = rng.normal(size=(4, 4))
            affine = max(affine, abs(cca(y, y @ t + rng.normal(size=4), reg=1e-12).similarity - 1.0))
        oracle = 0.0
        for _ in range(100):
            n = int(rng.integers(25, 90))
            p, q = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            a = rng.normal(size=(n, p))
            b = a[:, :1] @ rng.normal(size=(1, q)) + rng.normal(size=(n, q))
            sv = cca(a, b).singular_values
            for ref in (canonical_correlations_pencil(a, b, 1e-6), canonical_correlations_eig(a, b, 1e-6),
                        cca_generalized_eig(a, b)):
                oracle = max(oracle, float(np.max(np.abs(sv - ref))))
        st["detail"] = f"self {self_err:.1e}, affine {affine:.1e}, eig oracle {oracle:.1e}"
        assert self_err <= 1e-6 and affine <= 1e-5 and oracle <= 1e-8


def test_c05_bleu_gleu():
    with criterion(5, "BLEU/GLEU") as st:
        rng = np.random.default_rng(5)
        words = [f"w{i}" for i in range(30)]
        corpus = [list(rng.choice(words, size=rng.integers(4, 15))) for _ in range(20)]
        identity = corpus_bleu([[s] for s in corpus], corpus)
        bp_err = 0.0
        for _ in range(20):
            c, r = int(rng.integers(1, 40)), int(rng.integers(1, 40))
            expected = 1.0 if c > r else math.exp(1 - r / c)
            bp_err = max(bp_err, abs(brevity_penalty(c, r) - expected))
        exact = 0
        for _ in range(50):
            ref = list(rng.choice(words[:6], size=rng.integers(1, 9)))
            hyp = list(rng.choice(words[:6], size=rng.integers(1, 9)))
            expected = gleu_by_hand(ref, hyp)
            exact += Fraction(gleu(ref, hyp)) == Fraction(float(expected))
        st["detail"] = f"identity BLEU {identity}, BP err {bp_err:.1e}, GLEU exact {exact}/50"
        assert identity == 1.0
        assert gleu(corpus[0], corpus[0]) == 1.0
        assert bp_err <= 1e-12
        assert exact == 50


def _two_pole_vowel(f1=700.0, f2=1200.0, f0=120.0, seconds=0.5):
    n = int(seconds * SR)
    excitation = np.zeros(n)
    excitation[:: int(SR / f0)] = 1.0
    a = np.array([1.0])
    for freq, bw in ((f1, 80.0), (f2, 90.0)):
        r = np.exp(-np.pi * bw / SR)
        a = np.convolve(a, [1, -2 * r * np.cos(2 * np.pi * freq / SR), r * r])
    y = lfilter([1.0], a, excitation)
    return AudioBuffer(0.5 * y / np.abs(y).max(), SR)


def test_c06_dsp_fixtures():
    with criterion(6, "DSP fixtures", 30.0) as st:
        pitch_err = 0.0
        js = 0.0
        for f0 in (100, 150, 220, 330, 440):
            track = track_pitch(tone(f0), FrameConfig())
            pitch_err = max(pitch_err, abs(np.median(track.f0[track.voiced]) - f0) / f0)
            jitter, shimmer = jitter_shimmer(track)
            js = max(js, jitter, shimmer)
        vowel = _two_pole_vowel()
        res = formants_lpc(raw_frames(vowel, FrameConfig()), SR)
        f_err = max(abs(np.median(res.freqs[:, 0]) - 700) / 700, abs(np.median(res.freqs[:, 1]) - 1200) / 1200)
        t = np.arange(SR) / SR
        frames = frame_signal(AudioBuffer(0.5 * sawtooth(2 * np.pi * 200 * t), SR), FrameConfig())
        h1h2 = float(np.median(spectral_descriptors(frames, SR, f0=np.full(frames.shape[0], 200.0)).h1_h2_db))
        impulse = np.zeros((1, 400))
        impulse[0, 0] = 1.0
        flat = spectral_descriptors(impulse, SR)
        slope = max(abs(flat.slope_0_500[0]), abs(flat.slope_500_1500[0]))
        st["detail"] = (f"pitch err {pitch_err:.2%}, jitter/shimmer max {js:.1e}, formant err {f_err:.2%}, "
                        f"H1-H2 {h1h2:.2f} dB, flat slope {slope:.1e}")
        assert pitch_err < 0.02
        assert js < 1e-3
        assert f_err < 0.05
        assert abs(h1h2 - 6.02) <= 1.0
        assert slope < 1e-3


def test_c07_metric_identities():
    with criterion(7, "metric identities and gradient") as st:
        rng = np.random.default_rng(3)
        mismatches = 0
        for _ in range(500):
            k = int(rng.integers(2, 8))
            m = rng.integers(0, 25, size=(k, k))
            m[0, 0] += 1
            cm = ConfusionCounts(tuple(range(k)), m)
            mismatches += weighted_accuracy(cm) != unweighted_accuracy(cm)
        t = rng.normal(size=257)
        t -= t.mean()
        ccc_err = abs(ccc(2 * t, t) - 0.8)
        worst = 0.0
        h = 1e-5
        for seed in range(10):
            r = np.random.default_rng(100 + seed)
            xb = np.hstack([r.normal(size=(5, 3)), np.ones((5, 1))])
            y = np.eye(3)[r.integers(0, 3, size=5)]
            w = r.normal(size=(4, 3))
            _, g = loss_and_grad(w, xb, y, 1e-3)
            num = np.zeros_like(w)
            for idx in np.ndindex(*w.shape):
                e = np.zeros_like(w)
                e[idx] = h
                num[idx] = (loss_and_grad(w + e, xb, y, 1e-3)[0] - loss_and_grad(w - e, xb, y, 1e-3)[0]) / (2 * h)
            worst = max(worst, np.linalg.norm(g - num) / (np.linalg.norm(g) + np.linalg.norm(num)))
        st["detail"] = f"WA/UA mismatches {mismatches}/500, CCC err {ccc_err:.1e}, gradient rel err {worst:.1e}"
        assert mismatches == 0 and ccc_err <= 1e-9 and worst < 1e-4


def test_c08_class_ratio_identities():
    with criterion(8, "WR/ER/CR identities") as st:
        rng = np.random.default_rng(8)
        vocab = [f"t{i}" for i in range(12)]
        tags = ["Noun", "Verb", "Adj", "Func"]
        checked = 0
        for _ in range(50):
            # one class per word so the classes partition the tokens; some words stay unknown
            lex = {w: {tags[int(rng.integers(len(tags)))]} for w in vocab if rng.random() < 0.8}
            corpus = []
            for _ in range(int(rng.integers(1, 8))):
                ref = list(rng.choice(vocab, size=rng.integers(1, 25)))
                hyp = [w if rng.random() < 0.7 else str(rng.choice(vocab)) for w in ref if rng.random() < 0.9]
                hyp += list(rng.choice(vocab, size=rng.integers(0, 3)))
                corpus.append(ScoredUtterance(str(len(corpus)), tuple(ref), tuple(hyp), align(ref, hyp)))
            rows = class_stats([u.alignment for u in corpus], lex, tags)
            W, E = rows[0].total_words, rows[0].total_errors
            er_sum = Fraction(0)
            for row in rows:
                wr, er, cr = row.fractions()
                er_sum += er
                if row.word_count and E:
                    assert cr == er * E / (wr * W)
                    checked += 1
            if E:
                assert er_sum == 1
                assert any(r.cls == INSERTION for r in rows)
            ratios = sum(r.ratio for r in length_binned_wer(corpus))
            assert abs(ratios - 1.0) <= 1e-9
        st["detail"] = f"{checked} class rows exact, ER sums = 1, length-bin ratios sum to 1"


def test_c09_semisl_end_to_end():
    with criterion(9, "semi-supervised loop vs supervised_limited", 120.0) as st:
        gaps, loops, limited = [], [], []
        cfg = LoopConfig()
        for seed in range(10):
            task = make_blob_task(SyntheticConfig(seed=seed))
            assert len(task.pool.ids) == 1000 and task.pool.features.shape[1] == 64
            loop = run_loop(task.pool, task.records, LoopConfig(seed=seed)).final_ua
            base = run_baselines(task.pool, LoopConfig(seed=seed), "supervised_limited").val_ua
            loops.append(loop)
            limited.append(base)
            gaps.append(100 * (loop - base))
        idx, mask = merged_confident([[0.1, 0.1, 0.3, 0.5]], [[0.1, 0.1, 0.3, 0.5]], 0.5)
        runs = [make_blob_task(SyntheticConfig(seed=0)) for _ in range(2)]
        first, second = (run_loop(t.pool, t.records, cfg).history.to_csv() for t in runs)
        mean_gap = float(np.mean(gaps))
        st["detail"] = (f"mean UA loop {np.mean(loops):.4f} vs limited {np.mean(limited):.4f}, "
                        f"gain {mean_gap:+.2f} pts; merge example -> class {int(idx[0]) + 1}; "
                        f"rerun identical {first == second}")
        assert mean_gap >= 2.0
        assert int(idx[0]) + 1 == 4 and bool(mask[0])
        assert first == second


def test_c10_selftest_subcommand():
    with criterion(10, "selftest subcommand") as st:
        proc = subprocess.run([sys.executable, "-m", "speechaffect.cli", "selftest"],
                              capture_output=True, text=True, timeout=120)
        passes = proc.stdout.count("[PASS]")
        st["detail"] = f"exit {proc.returncode}, {passes} checks passed"
        assert proc.returncode == 0, proc.stdout + proc.stderr
        assert passes == 4
