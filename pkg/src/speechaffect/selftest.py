"""Bundled oracle checks: edit distance, FAD closed forms, CCA, metrics and gradients."""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.stats import ortho_group

from .asr.align import align
from .fad import GaussianStats, fit_gaussian, frechet_distance
from .metrics import ConfusionCounts, ccc, unweighted_accuracy, weighted_accuracy
from .probe import cca, cca_generalized_eig
from .semisl.classifier import loss_and_grad


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float
    budget: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail} ({self.seconds:.2f}s, budget {self.budget:g}s)"


def brute_edit_distance(ref: tuple, hyp: tuple) -> int:
    """Exhaustive recursion over the three edit choices, memoised for speed."""

    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == len(ref):
            return len(hyp) - j
        if j == len(hyp):
            return len(ref) - i
        return min(
            go(i + 1, j + 1) + (ref[i] != hyp[j]),
            go(i + 1, j) + 1,
            go(i, j + 1) + 1,
        )

    return go(0, 0)


def _timed(name: str, budget: float, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    start = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - start
    return CheckResult(name, ok and elapsed < budget, detail, elapsed, budget)


def check_edit_distance(n: int = 1000, seed: int = 0) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        vocab = "abcd"
        bad = 0
        for _ in range(n):
            ref = tuple(rng.choice(list(vocab), size=rng.integers(0, 9)))
            hyp = tuple(rng.choice(list(vocab), size=rng.integers(0, 9)))
            a = align(list(ref), list(hyp))
            bad += (a.S + a.D + a.I) != brute_edit_distance(ref, hyp)
        return bad == 0, f"{n - bad}/{n} pairs match the exhaustive minimum"

    return _timed("edit-distance oracle", 5.0, run)


def check_fad_closed_forms(n: int = 200, seed: int = 0) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst = {"closed": 0.0, "identity": 0.0, "symmetry": 0.0, "rotation": 0.0}
        for case in range(n):
            d = 1 if case % 2 == 0 else int(rng.integers(2, 6))
            mu_a, mu_b = rng.normal(size=d), rng.normal(size=d)
            sd_a, sd_b = rng.uniform(0.1, 3.0, d), rng.uniform(0.1, 3.0, d)
            a = GaussianStats(mu_a, np.diag(sd_a ** 2), 100)
            b = GaussianStats(mu_b, np.diag(sd_b ** 2), 100)
            expected = float(np.sum((mu_a - mu_b) ** 2) + np.sum((sd_a - sd_b) ** 2))
            got = frechet_distance(a, b)
            worst["closed"] = max(worst["closed"], abs(got - expected))
            worst["symmetry"] = max(worst["symmetry"], abs(got - frechet_distance(b, a)))
            x = rng.normal(size=(50, d)) @ rng.normal(size=(d, d))
            s = fit_gaussian(x)
            worst["identity"] = max(worst["identity"], frechet_distance(s, s))
            q = ortho_group.rvs(d, random_state=rng) if d > 1 else np.array([[-1.0]])
            ra = GaussianStats(q @ a.mean, q @ a.cov @ q.T, 100)
            rb = GaussianStats(q @ b.mean, q @ b.cov @ q.T, 100)
            worst["rotation"] = max(worst["rotation"], abs(frechet_distance(ra, rb) - got))
        ok = (worst["closed"] <= 1e-9 and worst["identity"] <= 1e-8
              and worst["symmetry"] <= 1e-8 and worst["rotation"] <= 1e-6)
        detail = ", ".join(f"{k} err {v:.1e}" for k, v in worst.items())
        return ok, detail

    return _timed("FAD closed forms", 2.0, run)


def check_cca(seed: int = 0) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(500, 6))
        self_err = abs(cca(x, x).similarity - 1.0)
        affine_err = 0.0
        for _ in range(50):
            y = rng.normal(size=(400, 5))
            z = y @ rng.normal(size=(5, 5)) + rng.normal(size=5)
            affine_err = max(affine_err, abs(cca(y, z).similarity - 1.0))
        oracle_err = 0.0
        for _ in range(100):
            n = int(rng.integers(30, 80))
            p, q = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            a = rng.normal(size=(n, p))
            b = a[:, :1] @ rng.normal(size=(1, q)) + rng.normal(size=(n, q))
            sv = cca(a, b).singular_values
            ev = cca_generalized_eig(a, b)
            oracle_err = max(oracle_err, float(np.max(np.abs(sv - ev[: sv.size]))))
        ok = self_err <= 1e-6 and affine_err <= 1e-5 and oracle_err <= 1e-8
        return ok, (f"self err {self_err:.1e}, affine err {affine_err:.1e}, "
                    f"eig-oracle err {oracle_err:.1e}")

    return _timed("CCA identities", 10.0, run)


def relative_gradient_error(seed: int = 0, h: float = 1e-5) -> float:
    rng = np.random.default_rng(seed)
    xb = np.hstack([rng.normal(size=(5, 3)), np.ones((5, 1))])
    y = np.eye(3)[rng.integers(0, 3, size=5)]
    w = rng.normal(size=(4, 3))
    _, grad = loss_and_grad(w, xb, y, 1e-2)
    num = np.zeros_like(w)
    for idx in np.ndindex(*w.shape):
        step = np.zeros_like(w)
        step[idx] = h
        num[idx] = (loss_and_grad(w + step, xb, y, 1e-2)[0] - loss_and_grad(w - step, xb, y, 1e-2)[0]) / (2 * h)
    return float(np.linalg.norm(grad - num) / max(np.linalg.norm(grad) + np.linalg.norm(num), 1e-12))


def check_metrics(seed: int = 0) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        mismatches = 0
        for _ in range(500):
            k = int(rng.integers(2, 7))
            cm = ConfusionCounts(tuple(range(k)), rng.integers(0, 20, size=(k, k)))
            if cm.n == 0:
                cm = ConfusionCounts(cm.labels, cm.matrix + np.eye(k, dtype=int))
            mismatches += weighted_accuracy(cm) != unweighted_accuracy(cm)
        t = rng.normal(size=101)
        t -= t.mean()
        ccc_err = abs(ccc(2 * t, t) - 0.8)
        grad_err = max(relative_gradient_error(s) for s in range(10))
        ok = mismatches == 0 and ccc_err <= 1e-9 and grad_err < 1e-4
        return ok, (f"WA/UA mismatches {mismatches}/500, CCC err {ccc_err:.1e}, "
                    f"gradient rel err {grad_err:.1e}")

    return _timed("metric identities + gradient", 10.0, run)


CHECKS = (check_edit_distance, check_fad_closed_forms, check_cca, check_metrics)


def run_selftest() -> list[CheckResult]:
    return [check() for check in CHECKS]
