from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from speechaffect.dataio import Matrix
from speechaffect.errors import InputError
from speechaffect.features import hierarchy
from speechaffect.probe import (
    cca,
    cca_generalized_eig,
    downsample_rows,
    emotion_conditioned_cca,
    hierarchical_cca_diff,
    layer_similarity_sweep,
    pairwise_layer_correlation,
)


def _rng(seed=0):
    return np.random.default_rng(seed)


class TestCca:
    def test_self_similarity(self):
        x = _rng().normal(size=(200, 4))
        np.testing.assert_allclose(cca(x, x).correlations, 1.0, atol=1e-6)

    def test_affine_image(self):
        rng = _rng(1)
        x = rng.normal(size=(100, 3))
        y = x @ rng.normal(size=(3, 3)) + rng.normal(size=3)
        np.testing.assert_allclose(cca(x, y).correlations, 1.0, atol=1e-5)

    def test_independent(self):
        rng = _rng(2)
        assert cca(rng.normal(size=(2000, 2)), rng.normal(size=(2000, 2))).mean_corr < 0.1

    def test_ordering_and_bounds(self):
        rng = _rng(3)
        x = rng.normal(size=(300, 5))
        y = x[:, :2] @ rng.normal(size=(2, 3)) + rng.normal(size=(300, 3))
        res = cca(x, y)
        c = res.correlations
        assert res.k == 3
        assert np.all(np.diff(c) <= 1e-8)
        assert np.all((c >= 0) & (c <= 1))

    def test_symmetry(self):
        rng = _rng(4)
        x, y = rng.normal(size=(80, 3)), rng.normal(size=(80, 3))
        y[:, 0] += x[:, 1]
        np.testing.assert_allclose(cca(x, y).correlations, cca(y, x).correlations, atol=1e-10)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 3), st.integers(20, 50))
    def test_eig_oracle(self, seed, p, q, n):
        rng = _rng(seed)
        x = rng.normal(size=(n, p))
        y = x[:, :1] @ rng.normal(size=(1, q)) + rng.normal(size=(n, q))
        sv = cca(x, y).singular_values
        np.testing.assert_allclose(sv, cca_generalized_eig(x, y)[: sv.size], atol=1e-8)

    def test_invariance_to_invertible_transforms(self):
        rng = _rng(5)
        x = rng.normal(size=(400, 3))
        y = x[:, :2] + rng.normal(size=(400, 2))
        base = cca(x, y, reg=1e-12).correlations
        for _ in range(20):
            a, b = rng.normal(size=(3, 3)), rng.normal(size=(2, 2))
            xa = x @ a + rng.normal(size=3)
            yb = y @ b + rng.normal(size=2)
            np.testing.assert_allclose(cca(xa, yb, reg=1e-12).correlations, base, atol=1e-5)
            # the default ridge only matters once a transformed variance nears it
            if max(np.linalg.cond(a), np.linalg.cond(b)) < 100:
                np.testing.assert_allclose(cca(xa, yb).correlations, base, atol=1e-5)

    def test_noise_never_helps(self):
        wins = 0
        for seed in range(20):
            rng = _rng(seed)
            x = rng.normal(size=(500, 2))
            noise = rng.normal(size=(500, 2))
            scores = [cca(x, x + s * noise).mean_corr for s in (0.1, 0.5, 1.0, 2.0)]
            wins += all(a >= b for a, b in zip(scores, scores[1:]))
        assert wins == 20

    def test_top1_reduction(self):
        rng = _rng(6)
        x = rng.normal(size=(300, 2))
        y = np.column_stack([x[:, 0], rng.normal(size=300)])
        res = cca(x, y, reduction="top1")
        assert res.similarity == pytest.approx(1.0, abs=1e-6)
        assert cca(x, y).similarity < 0.6

    def test_errors(self):
        with pytest.raises(InputError):
            cca(np.ones((1, 2)), np.ones((1, 2)))
        x = _rng().normal(size=(10, 2))
        with pytest.raises(InputError):
            cca(np.column_stack([x[:, 0], np.ones(10)]), x, reg=0.0)
        with pytest.warns(UserWarning):
            cca(x[:2], x[:2])


class TestDownsample:
    def test_pairs(self):
        x = np.arange(10, dtype=float)[:, None]
        np.testing.assert_array_equal(downsample_rows(x, 5).ravel(), [0.5, 2.5, 4.5, 6.5, 8.5])

    def test_uneven_bins(self):
        x = np.arange(7, dtype=float)[:, None]
        np.testing.assert_array_equal(downsample_rows(x, 3).ravel(), [1.0, 3.5, 5.5])

    def test_identity_and_errors(self):
        x = _rng().normal(size=(4, 2))
        np.testing.assert_array_equal(downsample_rows(x, 4), x)
        with pytest.raises(InputError):
            downsample_rows(x, 5)
        with pytest.raises(InputError):
            downsample_rows(x, 0)


class TestLayerAnalyses:
    def test_sweep_identity(self):
        f = _rng().normal(size=(120, 3))
        sweep = layer_similarity_sweep([f, f, f], f)
        np.testing.assert_allclose(list(sweep.scores.values()), 1.0, atol=1e-6)
        assert list(sweep.scores) == [0, 1, 2]

    def test_sweep_decreasing(self):
        rng = _rng(1)
        f = rng.normal(size=(300, 3))
        sweep = layer_similarity_sweep([f, rng.normal(size=(600, 3))], f)
        assert sweep.scores[0] == pytest.approx(1.0, abs=1e-6)
        assert sweep.scores[1] < 0.3

    def test_sweep_empty(self):
        with pytest.raises(InputError):
            layer_similarity_sweep([], np.zeros((3, 2)))

    def test_pairwise(self):
        rng = _rng(2)
        x = rng.normal(size=(400, 3))
        m = pairwise_layer_correlation([x, x @ rng.normal(size=(3, 3)), rng.normal(size=(400, 3))])
        np.testing.assert_allclose(m, m.T)
        np.testing.assert_allclose(np.diag(m), 1.0, atol=1e-6)
        assert m[0, 1] == pytest.approx(1.0, abs=1e-5)
        assert m[0, 2] < 0.2
        same = pairwise_layer_correlation([x, x, x])
        np.testing.assert_allclose(same, np.ones((3, 3)), atol=1e-6)
        with pytest.raises(InputError):
            pairwise_layer_correlation([x])

    def test_hier_self(self):
        rng = _rng(3)
        frame = Matrix(rng.normal(size=(500, 3)))
        f, p, w = hierarchy(frame)
        d_phone, _ = hierarchical_cca_diff(frame.values, f.values, p.values, w.values)
        assert d_phone <= 1e-6

    def test_hier_coarse_signal(self):
        rng = _rng(4)
        words = rng.normal(size=(40, 2))
        reps = np.repeat(words, 25, axis=0) + 2.0 * rng.normal(size=(1000, 2))
        feats = np.repeat(words, 25, axis=0) + 2.0 * rng.normal(size=(1000, 2))
        f, p, w = hierarchy(Matrix(feats))
        _, d_word = hierarchical_cca_diff(reps, f.values, p.values, w.values)
        assert d_word > 0

    def test_emotion_conditioned(self):
        rng = _rng(5)
        f = rng.normal(size=(120, 3))
        res = emotion_conditioned_cca(
            {"A": f, "B": rng.normal(size=(120, 3)), "C": f[:20]},
            {"A": f, "B": f, "C": f[:20]},
        )
        assert res.scores["A"] == pytest.approx(1.0, abs=1e-6)
        assert res.scores["A"] > res.scores["B"]
        assert res.absent == {"C": 20}
        twin = emotion_conditioned_cca({"x": f, "y": f}, {"x": f, "y": f})
        assert twin.scores["x"] == twin.scores["y"]
        with pytest.raises(InputError):
            emotion_conditioned_cca({}, {})
