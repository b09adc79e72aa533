import json

import numpy as np
import pytest

from fdridge.datagen import (Dataset, SyntheticSpec, dct_matrix, default_gamma_grid, gen_synthetic,
                             load_dataset, save_dataset, select_gamma, shingle_series)
from fdridge.linalg import InvalidInput


class TestSpec:
    def test_R(self):
        assert SyntheticSpec(n=4, d=256, rank_fraction=0.5).R == 128
        assert SyntheticSpec(n=4, d=10, rank_fraction=0.1).R == 1

    def test_invalid(self):
        with pytest.raises(InvalidInput):
            SyntheticSpec(n=4, d=5, rank_fraction=0.1)  # R = 0
        with pytest.raises(InvalidInput):
            SyntheticSpec(n=4, d=5, rank_fraction=1.5)
        with pytest.raises(InvalidInput):
            SyntheticSpec(n=0, d=5)


class TestSynthetic:
    def test_column_variance_profile(self):
        spec = SyntheticSpec(n=100_000, d=20, rank_fraction=0.5, seed=1, n_test=0)
        A = gen_synthetic(spec, rotate=False).A_train
        i = np.arange(20)
        expect = np.exp(-2 * i ** 2 / spec.R ** 2)
        np.testing.assert_allclose(A.var(axis=0), expect, rtol=0.05)

    def test_unit_truth_supported_on_R(self):
        spec = SyntheticSpec(n=10, d=40, rank_fraction=0.1, seed=2)
        raw = gen_synthetic(spec, rotate=False)
        assert np.linalg.norm(raw.x_true) == pytest.approx(1.0, abs=1e-12)
        assert np.all(raw.x_true[spec.R:] == 0)
        assert np.linalg.norm(gen_synthetic(spec).x_true) == pytest.approx(1.0, abs=1e-12)

    def test_dct_orthonormal(self):
        for d in (1, 7, 64):
            W = dct_matrix(d)
            assert np.max(np.abs(W @ W.T - np.eye(d))) <= 1e-10

    def test_rotation_consistent(self):
        spec = SyntheticSpec(n=50, d=16, seed=3)
        raw, rot = gen_synthetic(spec, rotate=False), gen_synthetic(spec)
        W = dct_matrix(16)
        np.testing.assert_allclose(rot.A_train, raw.A_train @ W.T, atol=1e-12)
        np.testing.assert_allclose(rot.x_true, W @ raw.x_true, atol=1e-12)
        np.testing.assert_array_equal(rot.b_train, raw.b_train)
        np.testing.assert_allclose(rot.A_train @ rot.x_true, raw.A_train @ raw.x_true, atol=1e-10)

    def test_rotation_keeps_spectrum(self):
        spec = SyntheticSpec(n=200, d=32, seed=4)
        s0 = np.linalg.svd(gen_synthetic(spec, rotate=False).A_train, compute_uv=False)
        s1 = np.linalg.svd(gen_synthetic(spec).A_train, compute_uv=False)
        np.testing.assert_allclose(s1, s0, rtol=1e-8)

    def test_deterministic(self):
        spec = SyntheticSpec(n=30, d=12, seed=5)
        a, b = gen_synthetic(spec), gen_synthetic(spec)
        for f in ("A_train", "b_train", "A_test", "b_test", "x_true"):
            np.testing.assert_array_equal(getattr(a, f), getattr(b, f))
        c = gen_synthetic(SyntheticSpec(n=30, d=12, seed=6))
        assert not np.array_equal(a.A_train, c.A_train)

    def test_test_split_default_d(self):
        data = gen_synthetic(SyntheticSpec(n=30, d=12, seed=5))
        assert data.A_test.shape == (12, 12) and data.b_test.shape == (12,)

    def test_hr_spectrum_decays_slower(self):
        d = 64
        sv = {}
        for kind, frac in (("lr", 0.1), ("hr", 0.5)):
            A = gen_synthetic(SyntheticSpec(n=2000, d=d, rank_fraction=frac, seed=7)).A_train
            s = np.linalg.svd(A, compute_uv=False)
            sv[kind] = s[d // 2] / s[0]
        assert sv["hr"] > sv["lr"]


class TestShingle:
    def test_constant(self):
        data = shingle_series(np.full(100, 3.0), d=5, n=20, seed=0)
        assert np.all(data.A_train == 0) and np.all(data.b_train == 0)
        assert np.all(data.A_test == 0)

    def test_ramp(self):
        data = shingle_series(np.arange(100.0), d=6, n=30, seed=0, n_test=10)
        assert data.A_train.shape == (30, 6) and data.A_test.shape == (10, 6)
        assert np.all(data.A_train == 1) and np.all(data.b_train == 1)

    def test_rows_are_windows_and_disjoint(self):
        rng = np.random.default_rng(0)
        y = np.cumsum(rng.standard_normal(300))
        diffs = np.diff(y)
        data = shingle_series(y, d=4, n=100, seed=1, n_test=50)
        starts = []
        for row, lab in zip(np.vstack([data.A_train, data.A_test]), np.concatenate([data.b_train, data.b_test])):
            i = int(np.flatnonzero(diffs == row[0])[0])
            np.testing.assert_array_equal(diffs[i:i + 4], row)
            assert diffs[i + 4] == lab
            starts.append(i)
        assert len(set(starts)) == 150

    def test_deterministic(self):
        y = np.sin(np.arange(500) / 7.0)
        a, b = shingle_series(y, 8, 100, seed=3), shingle_series(y, 8, 100, seed=3)
        np.testing.assert_array_equal(a.A_train, b.A_train)
        np.testing.assert_array_equal(a.b_test, b.b_test)

    def test_too_short(self):
        with pytest.raises(InvalidInput):
            shingle_series(np.arange(20.0), d=5, n=10, n_test=5)


class TestSelectGamma:
    def test_single_value(self):
        data = gen_synthetic(SyntheticSpec(n=40, d=8, seed=0))
        assert select_gamma(data, grid=[7.0]) == 7.0

    def test_empty_grid(self):
        data = gen_synthetic(SyntheticSpec(n=40, d=8, seed=0))
        with pytest.raises(InvalidInput):
            select_gamma(data, grid=[])

    def test_pure_noise_takes_largest(self):
        rng = np.random.default_rng(1)
        d = 20
        data = Dataset(rng.standard_normal((200, d)), 2 * rng.standard_normal(200),
                       rng.standard_normal((200, d)), 2 * rng.standard_normal(200), np.zeros(d))
        assert select_gamma(data) == default_gamma_grid()[-1]

    def test_ties_go_small(self):
        rng = np.random.default_rng(2)
        data = Dataset(rng.standard_normal((20, 3)), rng.standard_normal(20), np.zeros((5, 3)), np.ones(5))
        assert select_gamma(data, grid=[8.0, 2.0, 4.0]) == 2.0

    def test_custom_solver(self):
        data = gen_synthetic(SyntheticSpec(n=40, d=8, seed=0))
        seen = []

        def solver(acc, g):
            seen.append(g)
            from fdridge.ridge import solve_exact
            return solve_exact(acc, g)

        select_gamma(data, solver, grid=[1.0, 2.0])
        assert seen == [1.0, 2.0]


def _large_lr_picks(noise_var):
    return [select_gamma(gen_synthetic(SyntheticSpec(n=2 ** 13, d=2 ** 11, rank_fraction=0.1,
                                                     noise_var=noise_var, seed=s)))
            for s in range(3)]


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="with noise variance 4 the test residual is minimized near "
                                       "noise_var * R ~ 820, so the picks are 1024-2048, not ~4096")
def test_large_lr_gamma():
    # d = 2^11, n = 2^13; the target is 4096 give or take one power of two
    picks = _large_lr_picks(4.0)
    center = 2 ** np.mean(np.log2(picks))
    assert 2048 <= center <= 8192, picks


@pytest.mark.slow
def test_large_lr_gamma_noise_std_4():
    # same check with the noise standard deviation at 4 instead of the variance
    picks = _large_lr_picks(16.0)
    center = 2 ** np.mean(np.log2(picks))
    assert 2048 <= center <= 8192, picks


class TestPersistence:
    def test_roundtrip(self, tmp_path):
        data = gen_synthetic(SyntheticSpec(n=30, d=6, seed=8))
        man = save_dataset(data, tmp_path, {"kind": "hr", "gamma": 4.0})
        assert len(man["creation_hash"]) == 64
        back, man2 = load_dataset(tmp_path)
        assert man2 == json.loads((tmp_path / "manifest.json").read_text())
        for f in ("A_train", "b_train", "A_test", "b_test", "x_true"):
            np.testing.assert_array_equal(getattr(back, f), getattr(data, f))

    def test_hash_tracks_content(self, tmp_path):
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        h1 = save_dataset(gen_synthetic(SyntheticSpec(n=30, d=6, seed=8)), tmp_path / "a", {})["creation_hash"]
        h2 = save_dataset(gen_synthetic(SyntheticSpec(n=30, d=6, seed=9)), tmp_path / "b", {})["creation_hash"]
        assert h1 != h2

    def test_missing_dir(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            save_dataset(gen_synthetic(SyntheticSpec(n=5, d=4, seed=0)), tmp_path / "nope", {})
