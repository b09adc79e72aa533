"""Bound and accuracy suites checked against dense oracles.

Each ``check_*`` function returns a :class:`CheckResult`.  The oracles
here use plain dense numpy (full ``A^T A``, full SVD, ``np.linalg.solve``)
and never go through the sketch solve path they are checking.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .baselines import make_sketcher
from .datagen import SyntheticSpec, gen_synthetic
from .linalg import BOUND_SLACK
from .ridge import GramAccumulator, coef_error, lemma1_bound, solve_exact, theorem_required_gamma
from .risk import RiskModel, exact_solver, gram_solver, risk_exact, risk_monte_carlo, risk_sketch
from .sketch import FrequentDirections


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(name: str, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    t0 = time.perf_counter()
    ok, detail = fn()
    return CheckResult(name, bool(ok), detail, time.perf_counter() - t0)


def dense_tails(A) -> np.ndarray:
    s2 = np.linalg.svd(A, compute_uv=False) ** 2
    return np.concatenate([np.cumsum(s2[::-1])[::-1], [0.0]])


def dense_ridge(gram, c, gamma) -> np.ndarray:
    return np.linalg.solve(gram + gamma * np.eye(gram.shape[0]), c)


def check_covariance_bound(robust: bool = False, n_mats: int = 100, n: int = 200, d: int = 30,
                           ells=(5, 10, 15)) -> CheckResult:
    """FD: ``0 <= A^T A - B^T B`` and its top eigenvalue ``<= tail_k/(ell-k)``.
    RFD: ``||A^T A - B^T B - alpha I||_2 <= tail_k/(2(ell-k))``; all ``k < ell``."""
    name = "rfd covariance bound" if robust else "fd covariance bound"

    def run():
        violations = checks = 0
        worst = 0.0
        for seed in range(n_mats):
            A = np.random.default_rng(seed).standard_normal((n, d))
            K = A.T @ A
            tail = dense_tails(A)
            for ell in ells:
                fd = FrequentDirections(ell, d, robust=robust).fit(A)
                D = K - fd.covariance()
                if robust:
                    D -= fd.alpha * np.eye(d)
                ev = np.linalg.eigvalsh(D)
                err = max(abs(ev[0]), abs(ev[-1])) if robust else ev[-1]
                for k in range(ell):
                    bound = tail[k] / ((2.0 if robust else 1.0) * (ell - k))
                    checks += 1
                    bad = err > bound + BOUND_SLACK
                    if not robust:
                        bad = bad or ev[0] < -BOUND_SLACK
                    violations += bad
                    worst = max(worst, err / bound if bound > 0 else 0.0)
        return violations == 0, f"{violations} violations in {checks} checks, worst err/bound {worst:.3f}"

    return _timed(name, run)


def check_tightness() -> CheckResult:
    """``A^T A = 2I``, ``C^T C = I``, gamma = 1 in d = 2: the coefficient
    bound holds with equality, ``x_hat = c/2`` and ``x = c/3``."""

    def run():
        c_rows = np.eye(2)
        A = np.sqrt(2.0) * np.eye(2)
        b = np.array([0.7, -1.3])
        c = A.T @ b
        fd = FrequentDirections(2, 2)
        fd.push_batch(c_rows)
        fd.flush()
        fd.c = c.copy()
        x_hat = fd.solve(1.0).x
        x = solve_exact(GramAccumulator(2).push_batch(A, b), 1.0).x
        rep = lemma1_bound(A.T @ A, fd.covariance(), 1.0)
        ratio = np.linalg.norm(x_hat - x) / (rep.lemma1_factor * np.linalg.norm(x))
        ok = (abs(ratio - 1) <= 1e-10 and np.allclose(x_hat, c / 2, rtol=0, atol=1e-12)
              and np.allclose(x, c / 3, rtol=0, atol=1e-12) and abs(rep.lemma1_factor - 0.5) <= 1e-12)
        return ok, f"error/bound = {ratio:.15f}, factor = {rep.lemma1_factor}"

    return _timed("bound tightness (alpha=beta=gamma=1)", run)


def stream_matrix(seed: int, n: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian rows with geometrically decaying column scales, rotated."""
    rng = np.random.default_rng(seed)
    scales = 0.9 ** np.arange(d)
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    A = (rng.standard_normal((n, d)) * scales) @ Q.T
    b = A @ rng.standard_normal(d) + rng.standard_normal(n)
    return A, b


def check_sufficient_gamma(n_streams: int = 50, n: int = 1000, d: int = 64, ell: int = 16,
                             eps_values=(0.5, 0.1, 0.05)) -> CheckResult:
    """gamma from the sufficient condition (minimized over k) gives
    coefficient error <= eps, for FD and (halved gamma) RFD."""

    def run():
        fails = cases = 0
        worst = 0.0
        for seed in range(n_streams):
            A, b = stream_matrix(seed, n, d)
            tail = dense_tails(A)
            sketches = {r: FrequentDirections(ell, d, robust=r).fit(A, b) for r in (False, True)}
            K, c = A.T @ A, A.T @ b
            for eps in eps_values:
                for robust, fd in sketches.items():
                    gamma = min(theorem_required_gamma(tail[k], ell, k, eps, robust) for k in range(ell))
                    err = coef_error(fd.solve(gamma).x, dense_ridge(K, c, gamma))
                    cases += 1
                    fails += err > eps
                    worst = max(worst, err / eps)
        return fails == 0, f"{fails} failures in {cases} cases, worst error/eps {worst:.3f}"

    return _timed("sufficient-gamma end-to-end (fd, rfd)", run)


def check_solve_identity(n_instances: int = 200, max_d: int = 60) -> CheckResult:
    """Sketch solve equals the dense ``(V S^2 V^T + g I)^{-1} c`` to 1e-8 relative."""

    def run():
        worst = 0.0
        for seed in range(n_instances):
            rng = np.random.default_rng(10_000 + seed)
            d = int(rng.integers(1, max_d + 1))
            ell = int(rng.integers(2, 2 * d + 3))
            n = int(rng.integers(1, 4 * ell + 2))
            robust = bool(rng.integers(0, 2))
            A = rng.standard_normal((n, d)) * rng.uniform(0.1, 10)
            b = rng.standard_normal(n)
            fd = FrequentDirections(ell, d, robust=robust).fit(A, b)
            # gamma relative to the sketch spectrum keeps the dense oracle's
            # condition number <= 1e4, so its own error stays far below 1e-8
            gamma = float(10 ** rng.uniform(-4, 1)) * max(float(fd.sigma[0]) ** 2, 1.0)
            g = gamma + fd.alpha
            x_ref = dense_ridge(fd.covariance(), A.T @ b, g)
            rel = np.linalg.norm(fd.solve(gamma).x - x_ref) / max(np.linalg.norm(x_ref), 1e-300)
            worst = max(worst, rel)
        return worst <= 1e-8, f"worst relative difference {worst:.2e} over {n_instances} instances"

    return _timed("sketch solve vs dense inverse", run)


RISK_MODEL_SEED = 500


def risk_corpus(n_models: int = 10):
    """Fixed models for the risk checks: Gaussian A (n <= 100, d <= 20), an
    FD sketch of A, and gamma on the scale of A's spectrum."""
    out = []
    for seed in range(n_models):
        rng = np.random.default_rng(RISK_MODEL_SEED + seed)
        d = int(rng.integers(5, 21))
        n = int(rng.integers(max(d + 5, 40), 101))
        A = rng.standard_normal((n, d))
        x = rng.standard_normal(d)
        ell = int(rng.integers(2, d))
        gamma = float(rng.uniform(0.1, 1.0) * np.linalg.norm(A, 2) ** 2)
        fd = FrequentDirections(ell, d).fit(A)
        out.append((RiskModel(A, x, s=float(rng.uniform(0.5, 2.0)), gamma=gamma), fd.covariance()))
    return out


def check_risk_monte_carlo(n_models: int = 10, trials: int = 10_000, z: float = 3.0) -> CheckResult:
    """Closed-form bias^2/variance within ``z`` standard errors of Monte
    Carlo, for exact and sketched solves; each variance bound that is
    defined must be at least the measured variance."""

    def run():
        misses, notes = 0, []
        for i, (m, Kh) in enumerate(risk_corpus(n_models)):
            ex, sk = risk_exact(m), risk_sketch(m, Kh)
            # noise seeds derived from the model's own seed
            s_ex, s_sk = np.random.SeedSequence(RISK_MODEL_SEED + i).generate_state(2)
            mc_ex = risk_monte_carlo(m, exact_solver(m.A, m.gamma), trials, seed=int(s_ex))
            mc_sk = risk_monte_carlo(m, gram_solver(m.A, Kh, m.gamma), trials, seed=int(s_sk))
            for tag, cf, mc in (("exact", ex, mc_ex), ("sketch", sk, mc_sk)):
                zb = abs(cf.bias_sq - mc.bias_sq) / mc.bias_se
                zv = abs(cf.variance - mc.variance) / mc.variance_se
                if zb > z or zv > z:
                    misses += 1
                    notes.append(f"model {i} {tag}: z_bias={zb:.2f} z_var={zv:.2f}")
            for bname in ("var_bound_main", "var_bound_l4", "var_bound_l5"):
                bound = getattr(sk, bname)
                if bound is not None and bound < max(mc_sk.variance, sk.variance):
                    misses += 1
                    notes.append(f"model {i}: {bname}={bound:.4g} < variance {mc_sk.variance:.4g}")
        detail = f"{misses} misses over {n_models} models" + ("; " + "; ".join(notes) if notes else "")
        return misses == 0, detail

    return _timed("risk closed forms vs Monte Carlo", run)


def check_exact_recovery(n_streams: int = 20, gammas=(1e-2, 1e-1, 1.0, 10.0, 1e2, 1e3, 1e4)) -> CheckResult:
    """Streams of rank <= ell - 1 are sketched without error."""

    def run():
        worst = 0.0
        for seed in range(n_streams):
            rng = np.random.default_rng(900 + seed)
            d = int(rng.integers(4, 40))
            ell = int(rng.integers(2, d + 1))
            r = int(rng.integers(1, ell))
            n = int(rng.integers(ell, 300))
            A = rng.standard_normal((n, r)) @ rng.standard_normal((r, d))
            b = rng.standard_normal(n)
            for name in ("fd", "rfd"):
                sk = make_sketcher(name, ell, d).fit(A, b)
                rr = GramAccumulator(d).fit(A, b)
                for g in gammas:
                    worst = max(worst, coef_error(sk.solve(g).x, rr.solve(g).x))
        return worst <= 1e-6, f"worst coefficient error {worst:.2e}"

    return _timed("exact recovery for rank < ell", run)


def check_large_sweep(d: int = 2 ** 11, n: int = 2 ** 13, gamma: float = 32768.0,
                      ells=tuple(2 ** p for p in range(4, 10)), trials: int = 10, seed: int = 0,
                      workers: int = 1) -> tuple[CheckResult, list]:
    """High-rank sweep: FD/RFD error non-increasing in ell (5% slack between
    neighbours), and every FD-family solver beats rp and cs for ell <= 256."""
    from .experiment import SweepConfig, run_sweep

    t0 = time.perf_counter()
    data = gen_synthetic(SyntheticSpec(n=n, d=d, rank_fraction=0.5, seed=seed))
    solvers = ["fd", "rfd", "isvd", "twolevel", "rp", "cs"]
    cfg = SweepConfig(solvers, list(ells), gamma, trials, seed, "hr")
    records = run_sweep(data, cfg, workers=workers)
    mean = {(r.solver, r.ell): r.coef_error for r in records if r.trial == "mean"}
    notes = []
    for s in ("fd", "rfd"):
        for a, b in zip(ells, ells[1:]):
            if mean[(s, b)] > 1.05 * mean[(s, a)]:
                notes.append(f"{s} error rises from ell={a} to ell={b}")
    for e in ells:
        if e > 256:
            continue
        for s in ("fd", "rfd", "isvd", "twolevel"):
            for r in ("rp", "cs"):
                if not mean[(s, e)] < mean[(r, e)]:
                    notes.append(f"{s} does not beat {r} at ell={e}")
    table = "; ".join(f"{s}:" + ",".join(f"{mean[(s, e)]:.3g}" for e in ells) for s in solvers)
    ok = not notes
    detail = (table if ok else "; ".join(notes) + " | " + table)
    return CheckResult("large high-rank sweep", ok, detail, time.perf_counter() - t0), records


def check_timing_shape(ell: int = 64, d: int = 2 ** 11, n_pair=(2 ** 12, 2 ** 13),
                       d_pair=(2 ** 10, 2 ** 11), n_for_d: int = 2 ** 8, repeats: int = 3) -> CheckResult:
    """FD training time linear in n; FD query time at most linear in d (50%
    slack); exact-solver query time superquadratic in d."""
    from .experiment import bench_cell

    def run():
        t_n = [bench_cell("fd", n, d, ell, repeats=repeats)["train_time_s"] for n in n_pair]
        q_fd = [bench_cell("fd", n_for_d, dd, ell, repeats=repeats)["query_time_s"] for dd in d_pair]
        q_rr = [bench_cell("rr", n_for_d, dd, ell, repeats=repeats)["query_time_s"] for dd in d_pair]
        r_train = t_n[1] / t_n[0]
        r_fd = q_fd[1] / q_fd[0]
        r_rr = q_rr[1] / q_rr[0]
        dr = d_pair[1] / d_pair[0]
        ok = 1.6 <= r_train <= 2.6 and r_fd <= 1.5 * dr and r_rr > dr ** 2
        return ok, (f"fd train ratio (n x2) {r_train:.2f}; fd query ratio (d x2) {r_fd:.2f}; "
                    f"rr query ratio (d x2) {r_rr:.2f}")

    return _timed("timing shape", run)


def run_all(quick: bool = False) -> list[CheckResult]:
    """Every suite except the large sweep and the timing benchmark."""
    if quick:
        return [
            check_covariance_bound(False, n_mats=10),
            check_covariance_bound(True, n_mats=10),
            check_tightness(),
            check_sufficient_gamma(n_streams=5),
            check_solve_identity(n_instances=40),
            check_risk_monte_carlo(n_models=3, trials=2000),
            check_exact_recovery(n_streams=5),
        ]
    return [
        check_covariance_bound(False),
        check_covariance_bound(True),
        check_tightness(),
        check_sufficient_gamma(),
        check_solve_identity(),
        check_risk_monte_carlo(),
        check_exact_recovery(),
    ]
