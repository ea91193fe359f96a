"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest -v tests/test_acceptance.py`` or directly with
``python tests/test_acceptance.py``.
"""
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from anchortm.anchors import find_anchors  # noqa: E402
from anchortm.dirichlet import (DirichletParams, dirichlet_moment_matrix, gamma_lower_bound,  # noqa: E402
                                recover_dirichlet)
from anchortm.gram import split_and_estimate_gram  # noqa: E402
from anchortm.l1geom import beta_robust_simplicial, gamma_l1  # noqa: E402
from anchortm.matcore import solve_linear  # noqa: E402
from anchortm.pipeline import PipelineConfig, run_pipeline, run_sweep  # noqa: E402
from anchortm.recover import recover_from_anchors  # noqa: E402
from anchortm.synth import make_separable_topic_matrix, sample_documents  # noqa: E402
from oracles import gamma_grid, random_stochastic  # noqa: E402


RESULTS = []


def _report(number, ok, detail, reporter=None):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    RESULTS.append(line)
    if reporter is not None:
        # pytest captures stdout, so write through its terminal reporter
        reporter.write_line("")
        reporter.write_line(line)
    else:
        print(line, flush=True)
    return line


def criterion_1():
    """Exact Q: recovered A and R match to 1e-8 on 100 random instances."""
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst_A = worst_R = 0.0
    for t in range(100):
        r = int(rng.integers(2, 7))
        n = int(rng.integers(2 * r, 51))
        p = float(rng.uniform(0.1, 0.3))
        alpha = rng.uniform(0.1, 10, size=r).tolist()
        cfg = PipelineConfig(n=n, r=r, p=p, seed=t, exact_q=True,
                             prior={"kind": "dirichlet", "alpha": alpha})
        m = run_pipeline(cfg).metrics
        worst_A = max(worst_A, m["max_column_l1_error"])
        worst_R = max(worst_R, m["R_error_l1"])
    elapsed = time.perf_counter() - t0
    ok = worst_A <= 1e-8 and worst_R <= 1e-8 and elapsed < 30
    return ok, f"max A error {worst_A:.2e}, max R error {worst_R:.2e}, {elapsed:.1f}s (limits 1e-8, 1e-8, 30s)"


def _almost_anchor_instance(rng, eps):
    r = int(rng.integers(2, 6))
    n = int(rng.integers(2 * r, 31))
    # E = I + Z, rows of E sum to one, sum |Z| = eps exactly
    off = rng.random((r, r))
    np.fill_diagonal(off, 0)
    off *= (eps / 2) / off.sum()
    E = np.eye(r) + off
    E[np.diag_indices(r)] -= off.sum(axis=1)
    D = rng.uniform(0.1, 0.3, size=r)
    top = D[:, None] * E
    rest = rng.dirichlet(np.ones(n - r), size=r).T * (1 - top.sum(axis=0))
    A = np.vstack([top, rest])
    R = dirichlet_moment_matrix(DirichletParams(rng.uniform(0.5, 5, size=r)))
    return A, R, np.abs(E - np.eye(r)).sum()


def criterion_2():
    """Almost anchors: column error <= 6 eps and R error <= 8 eps."""
    rng = np.random.default_rng(202)
    parts, ok = [], True
    for eps in (0.01, 0.05, 0.1):
        worst_A = worst_R = 0.0
        for _ in range(100):
            A, R, z_norm = _almost_anchor_instance(rng, eps)
            assert abs(z_norm - eps) < 1e-12
            res = recover_from_anchors(A @ R @ A.T, np.arange(R.shape[0]))
            worst_A = max(worst_A, np.abs(res.A_hat - A).sum(axis=0).max() / eps)
            worst_R = max(worst_R, np.abs(res.R_hat - R).sum() / eps)
        ok &= worst_A <= 6 and worst_R <= 8
        parts.append(f"eps={eps}: A {worst_A:.2f}eps, R {worst_R:.2f}eps")
    return ok, "; ".join(parts) + " (limits 6eps, 8eps)"


def criterion_3():
    """Inverse perturbation bounds for E = I + Z with sum |Z| = eps < 1/2."""
    rng = np.random.default_rng(303)
    violations = 0
    worst = 0.0
    for _ in range(1000):
        r = int(rng.integers(2, 9))
        eps = float(rng.uniform(0, 0.5))
        Z = rng.normal(size=(r, r)) * (rng.random((r, r)) < 0.7)
        if not np.abs(Z).sum():
            Z[0, 0] = 1.0
        Z *= eps / np.abs(Z).sum()
        E = np.eye(r) + Z
        b = solve_linear(E, np.ones(r))
        inv = np.column_stack([solve_linear(E, e) for e in np.eye(r)])
        col = np.abs(inv - np.eye(r)).sum(axis=0).max()
        dev = np.abs(b - 1).max()
        worst = max(worst, dev / eps, col / eps)
        violations += dev > 2 * eps + 1e-12 or col > 2 * eps + 1e-12
    return violations == 0, f"{violations} violations in 1000 draws, worst ratio {worst:.3f} (limit 2)"


def criterion_4():
    """Dirichlet: exact round trip to 1e-10; noisy error within 5 a r (a0+1) eps_R."""
    rng = np.random.default_rng(404)
    worst_exact = 0.0
    violations = 0
    worst_ratio = 0.0
    eps_R = 1e-3
    for _ in range(1000):
        r = int(rng.integers(2, 11))
        params = DirichletParams(rng.uniform(0.1, 10, size=r))
        R = dirichlet_moment_matrix(params)
        worst_exact = max(worst_exact, np.abs(recover_dirichlet(R).alpha - params.alpha).max())
        noise = rng.normal(size=(r, r))
        noise = (noise + noise.T) / 2
        noise *= eps_R / np.abs(noise).sum()
        bound = 5 * params.a * r * (params.alpha0 + 1) * eps_R
        try:
            err = np.abs(recover_dirichlet(R + noise, tol=0.05).alpha - params.alpha).max()
        except Exception:
            err = np.inf
        worst_ratio = max(worst_ratio, err / bound)
        violations += err > bound
    ok = worst_exact <= 1e-10 and violations == 0
    return ok, (f"round trip max error {worst_exact:.2e} (limit 1e-10); noisy bound violated in "
                f"{violations}/1000 trials, worst error/bound {worst_ratio:.2f}")


def criterion_5():
    """Condition number: composition, Dirichlet bound and grid oracle."""
    rng = np.random.default_rng(505)
    comp_bad = 0
    for _ in range(200):
        k = int(rng.integers(2, 6))
        B, C = random_stochastic(rng, k), random_stochastic(rng, k)
        comp_bad += gamma_l1(B @ C) < gamma_l1(B) * gamma_l1(C) - 1e-7
    dir_bad = 0
    for _ in range(200):
        params = DirichletParams(rng.uniform(0.1, 10, size=int(rng.integers(2, 7))))
        dir_bad += gamma_l1(dirichlet_moment_matrix(params)) < gamma_lower_bound(params)
    grid_gap = 0.0
    cases = [random_stochastic(rng, 2) for _ in range(5)] + [random_stochastic(rng, 3) for _ in range(3)]
    cases.append(dirichlet_moment_matrix(DirichletParams([1.0, 1.0])))
    for B in cases:
        grid_gap = max(grid_gap, abs(gamma_l1(B) - gamma_grid(B)))
    ok = comp_bad == 0 and dir_bad == 0 and grid_gap <= 1e-3
    return ok, (f"composition violations {comp_bad}/200, Dirichlet bound violations {dir_bad}/200, "
                f"max grid gap {grid_gap:.1e} (limit 1e-3)")


def criterion_6():
    """Gram matrix is unbiased for A (W W^T / m) A^T at fixed W."""
    tm = make_separable_topic_matrix(10, 3, 0.2, seed=606)
    m, N = 10_000, 100
    W = np.random.default_rng(606).dirichlet(np.ones(3), size=m).T
    target = tm.A @ (W @ W.T / m) @ tm.A.T
    Qs = [split_and_estimate_gram(sample_documents(tm.A, W, N, seed=1000 + t)).Q for t in range(20)]
    dev = np.abs(np.mean(Qs, axis=0) - target).max()
    return dev <= 0.005, f"max entrywise deviation {dev:.2e} at m*N = {m * N:.0e} (limit 0.005)"


def _noisy_rows(rng):
    r = int(rng.integers(2, 6))
    n = int(rng.integers(3 * r, 41))
    tm = make_separable_topic_matrix(n, r, float(rng.uniform(0.1, 0.4)), seed=int(rng.integers(1 << 30)))
    W = rng.dirichlet(np.full(r, 0.5), size=int(rng.integers(20, 60))).T
    Wn = W / W.sum(axis=1, keepdims=True)
    gamma = beta_robust_simplicial(Wn, by="rows")
    eps = gamma / 200
    M = tm.A @ W
    M /= M.sum(axis=1, keepdims=True)
    U = rng.dirichlet(np.ones(M.shape[1]), size=n)
    step = eps / np.abs(U - M).sum(axis=1, keepdims=True)
    Mn = M + step * (U - M)
    # weights of each row as a convex combination of the normalized W rows
    weights = tm.A * W.sum(axis=1)[None, :]
    purity = (weights / weights.sum(axis=1, keepdims=True)).max(axis=1)
    return Mn, r, eps, gamma, purity


def criterion_7():
    """Anchor finder at noise gamma/200: complete, sound and r components."""
    rng = np.random.default_rng(707)
    missed = impure = wrong_count = 0
    for _ in range(100):
        Mn, r, eps, gamma, purity = _noisy_rows(rng)
        try:
            s = find_anchors(Mn, eps, r, gamma)
        except Exception:
            wrong_count += 1
            continue
        missed += not set(range(r)) <= set(s.loners.tolist())
        impure += (purity[s.word_indices] < 1 - 10 * eps / gamma).any()
    ok = missed == wrong_count == impure == 0
    return ok, (f"missed canonical rows in {missed}/100, impure anchors in {impure}/100, "
                f"component count != r in {wrong_count}/100")


def criterion_8():
    """Desk-scale sweep: median error non-increasing in m and <= 0.3 at m = 80000."""
    cfg = PipelineConfig(n=40, r=3, p=0.15, N=100, prior={"kind": "dirichlet", "alpha": [1.0, 1.0, 1.0]},
                         threads=min(4, os.cpu_count() or 1))
    t0 = time.perf_counter()
    rows, summary = run_sweep(cfg, [5000, 20000, 80000], range(10), workers=cfg.threads)
    elapsed = time.perf_counter() - t0
    medians = [s["median_max_error"] for s in summary]
    failed = sum(r["status"] != "ok" for r in rows)
    ok = (None not in medians and all(b <= a for a, b in zip(medians, medians[1:]))
          and medians[-1] <= 0.3 and elapsed <= 600 and failed == 0)
    table = ", ".join(f"m={s['m']}: {s['median_max_error']}" for s in summary)
    return ok, f"median max column error {table}; {failed} failed runs; {elapsed:.0f}s (limits 0.3, 600s)"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4,
            criterion_5, criterion_6, criterion_7, criterion_8]


@pytest.mark.parametrize("number", range(1, 9), ids=lambda k: f"criterion_{k}")
def test_criterion(number, request):
    ok, detail = CRITERIA[number - 1]()
    _report(number, ok, detail, request.config.pluginmanager.get_plugin("terminalreporter"))
    assert ok, detail


if __name__ == "__main__":
    results = []
    for k, fn in enumerate(CRITERIA, start=1):
        ok, detail = fn()
        _report(k, ok, detail)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
