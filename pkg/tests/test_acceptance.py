"""Acceptance suite: one test per criterion, each at its stated size and
tolerance.  Every test prints a single PASS/FAIL line; the lines are
repeated in the pytest terminal summary (see conftest.py).

Run alone with ``pytest tests/test_acceptance.py -v`` or
``python tests/test_acceptance.py``.
"""
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from fdridge import verify
from fdridge.experiment import write_records
from fdridge.ridge import GramAccumulator, coef_error, lemma1_bound
from fdridge.sketch import FrequentDirections

RESULTS = []  # (criterion, passed, detail), read by conftest's summary hook


def report(num, title, passed, detail):
    line = f"criterion {num} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    RESULTS.append(line)
    print(line)
    return passed


def test_c1_fd_covariance_bound():
    res = verify.check_covariance_bound(robust=False, n_mats=100, n=200, d=30, ells=(5, 10, 15))
    ok = res.passed and res.seconds < 60
    assert report(1, "FD bound, 100 matrices 200x30, ell in {5,10,15}, all k",
                  ok, f"{res.detail}; {res.seconds:.1f}s (limit 60s)"), res.detail


def test_c2_rfd_covariance_bound():
    res = verify.check_covariance_bound(robust=True, n_mats=100, n=200, d=30, ells=(5, 10, 15))
    assert report(2, "RFD bound with 2(ell-k)", res.passed, f"{res.detail}; {res.seconds:.1f}s"), res.detail


def test_c3_tightness():
    res = verify.check_tightness()
    # independent restatement: A^T A = 2I, C^T C = I, gamma = 1, d = 2
    c = np.array([0.3, -2.0])
    fd = FrequentDirections(2, 2).fit(np.eye(2))
    fd.c = c
    x_hat = fd.solve(1.0).x
    acc = GramAccumulator(2)
    acc.gram, acc.c = 2 * np.eye(2), c
    x = acc.solve(1.0).x
    factor = lemma1_bound(2 * np.eye(2), fd.covariance(), 1.0).lemma1_factor
    ratio = coef_error(x_hat, x) / factor
    ok = (res.passed and abs(ratio - 1) <= 1e-10
          and np.max(np.abs(x_hat - c / 2)) <= 1e-12 and np.max(np.abs(x - c / 3)) <= 1e-12)
    assert report(3, "tightness instance", ok, f"{res.detail}; second instance ratio {ratio:.15f}")


def test_c4_sufficient_gamma():
    res = verify.check_sufficient_gamma(n_streams=50, n=1000, d=64, eps_values=(0.5, 0.1, 0.05))
    ok = res.passed and res.seconds < 300
    assert report(4, "sufficient gamma, 50 streams 1000x64, eps in {0.5,0.1,0.05}, fd+rfd",
                  ok, f"{res.detail}; {res.seconds:.1f}s (limit 300s)"), res.detail


def test_c5_solve_identity():
    res = verify.check_solve_identity(n_instances=200, max_d=60)
    assert report(5, "sketch solve vs dense inverse, 200 instances, 1e-8", res.passed, res.detail), res.detail


def test_c6_risk_monte_carlo():
    res = verify.check_risk_monte_carlo(n_models=10, trials=10_000, z=3.0)
    assert report(6, "risk closed forms vs 1e4-trial Monte Carlo (3 SE) and variance bounds",
                  res.passed, f"{res.detail}; {res.seconds:.1f}s"), res.detail


@pytest.mark.slow
def test_c7_large_sweep():
    res, records = verify.check_large_sweep(d=2 ** 11, n=2 ** 13, gamma=32768.0,
                                            ells=tuple(2 ** p for p in range(4, 10)), trials=10)
    out = Path(tempfile.mkdtemp()) / "large_sweep.csv"
    write_records(out, records)
    ok = res.passed and res.seconds < 1800
    assert report(7, "HR d=2^11 n=2^13 gamma=32768 sweep, 10 trials",
                  ok, f"{res.detail}; {res.seconds:.0f}s (limit 1800s); rows in {out}"), res.detail


@pytest.mark.slow
def test_c8_timing_shape():
    res = verify.check_timing_shape(ell=64, d=2 ** 11)
    assert report(8, "timing shape (ell=64, d=2^11)", res.passed, f"{res.detail}; {res.seconds:.0f}s"), res.detail


def _low_rank_streams(count):
    for seed in range(count):
        rng = np.random.default_rng(4000 + seed)
        d = int(rng.integers(4, 40))
        ell = int(rng.integers(2, d + 1))
        r = int(rng.integers(1, ell))
        n = int(rng.integers(ell, 300))
        A = rng.standard_normal((n, r)) @ rng.standard_normal((r, d)) * 10.0 ** rng.uniform(-3, 3)
        yield A, rng.standard_normal(n), ell


def test_c9_exact_recovery():
    res = verify.check_exact_recovery(n_streams=20)
    # gamma measured against sigma_1^2 of the stream, from 1e-8 up to 1e12;
    # the streams themselves span six orders of magnitude in scale
    worst = 0.0
    for A, b, ell in _low_rank_streams(40):
        s1 = np.linalg.norm(A, 2) ** 2
        rr = GramAccumulator(A.shape[1]).fit(A, b)
        for name in ("fd", "rfd"):
            sk = FrequentDirections(ell, A.shape[1], robust=name == "rfd").fit(A, b)
            for k in range(-8, 13):
                g = s1 * 10.0 ** k
                worst = max(worst, coef_error(sk.solve(g).x, rr.solve(g).x))
    ok = res.passed and worst <= 1e-6
    assert report(9, "exact recovery, rank <= ell-1, coef_error <= 1e-6, gamma >= 1e-8 sigma_1^2",
                  ok, f"{res.detail}; scaled streams {worst:.2e}"), res.detail


@pytest.mark.xfail(strict=True, reason="below gamma ~ 1e-8 sigma_1^2 rounding in the stored basis, "
                                       "divided by gamma, exceeds 1e-6; two dense solvers disagree too")
def test_c9_every_gamma_literal():
    rng = np.random.default_rng(99)
    A = rng.standard_normal((150, 5)) @ rng.standard_normal((5, 30))
    b = rng.standard_normal(150)
    g = 1e-6  # sigma_1^2 is about 8300 here
    x_fd = FrequentDirections(6, 30).fit(A, b).solve(g).x
    x_rr = GramAccumulator(30).fit(A, b).solve(g).x
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    x_svd = Vt.T @ (s / (s ** 2 + g) * (U.T @ b))
    err = coef_error(x_fd, x_rr)
    dense_gap = coef_error(x_rr, x_svd)
    assert report("9*", "literal 'every gamma > 0' at gamma=1e-6 (expected to fail)",
                  err <= 1e-6, f"fd vs rr {err:.2e}; Cholesky vs SVD dense solves differ by {dense_gap:.2e}")


if __name__ == "__main__":
    t0 = time.perf_counter()
    tests = [fn for name, fn in sorted(globals().items()) if name.startswith("test_c")]
    failed = 0
    for fn in tests:
        try:
            fn()
        except AssertionError:
            failed += 1
    print(f"{len(tests) - failed}/{len(tests)} criteria passed in {time.perf_counter() - t0:.0f}s")
    raise SystemExit(1 if failed else 0)
