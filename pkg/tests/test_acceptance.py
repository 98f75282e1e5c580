"""Acceptance criteria, one test each, at the stated tolerances.

Every test prints a single ``criterion N: PASS|FAIL`` line (also gathered in
the terminal summary) before asserting.
"""

from __future__ import annotations

import itertools
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from cursorwalk import evolve as ev
from cursorwalk import walkdyn as wd
from cursorwalk.cli import FIGURES
from cursorwalk.pathspec import (
    build_cnot_network,
    build_full_machine,
    build_linear_chain,
    build_subroutine_machine,
    cnot_path_length,
    enumerate_successors,
    oracle_call_indices,
    path_length,
    steps_exact,
    z_register,
)
from cursorwalk.spinops import index_word, word_index

LAM = 3 * np.pi / 8


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_1_peak_constants():
    z0 = wd.peak_root()
    pr = wd.peak_value()
    ok = abs(z0 - 3.518) <= 0.001 and abs(pr - 0.92) <= 0.01
    verdict(1, ok, f"z0={z0:.6f} (3.518 +- 0.001), peak={pr:.5f} (0.92 +- 0.01)")


def test_criterion_2_chain_figure():
    mu, s = 6, 129
    start = time.perf_counter()
    t0, _ = wd.first_peak(mu, LAM, "chain")
    t_peak, pr_peak = wd.locate_max(lambda t: wd.pr_exact_chain(t, mu, s, LAM), 0.5 * t0, 1.5 * t0, 0.01)
    t = np.arange(0.005, 0.8 * s / LAM, 0.01)
    dev = np.abs(wd.pr_exact_chain(t, mu, s, LAM) - wd.pr_closed_chain(t, mu, LAM))
    elapsed = time.perf_counter() - start
    peak_ok = abs(pr_peak - 0.92) <= 0.02 and abs(t_peak - t0) <= 0.1 * t0
    sup_ok = dev.max() < 0.05
    ok = peak_ok and sup_ok and elapsed < 10
    verdict(
        2,
        ok,
        f"peak {pr_peak:.4f} at t={t_peak:.3f} vs t0={t0:.3f} [{'ok' if peak_ok else 'out'}]; "
        f"sup|exact-closed|={dev.max():.4f} at t={t[dev.argmax()]:.2f} (< 0.05) [{'ok' if sup_ok else 'out'}]; "
        f"{elapsed:.2f}s",
    )


def test_criterion_3_subroutine_figure():
    mu, K = 6, 6
    p = path_length(K)
    start = time.perf_counter()
    t = np.arange(0.05, p / LAM, 0.05)  # the front reaches the far end at lam t = p
    dev = np.abs(wd.pr_exact_subroutine(t, mu, K, LAM) - wd.pr_closed_subroutine(t, mu, LAM))
    elapsed = time.perf_counter() - start
    ok = p == 507 and dev.max() < 0.05 and elapsed < 30
    verdict(3, ok, f"p={p}; sup|exact-closed|={dev.max():.4f} at t={t[dev.argmax()]:.2f} (< 0.05) before t={p / LAM:.1f}; {elapsed:.2f}s")


def test_criterion_4_reduced_full_equivalence():
    times = [1.0, 5.0, 10.0]
    worst = {}
    for name, g, target in [
        ("chain(mu=2,s=9)", build_linear_chain(2, 9), (1, -1)),
        ("subroutine(mu=2,K=1)", build_subroutine_machine(1, mu=2), (1, -1)),
    ]:
        H = ev.assemble(g, LAM, target)
        ov, ref = ev.reduced_overlaps(H, ev.initial_state(H.basis), times)
        worst[name] = float(np.max(np.abs(ov - ref)))
    ok = all(v < 1e-8 for v in worst.values())
    verdict(4, ok, ", ".join(f"{k} max dev {v:.2e}" for k, v in worst.items()) + " (< 1e-8)")


def test_criterion_5_combinatorics():
    problems = []
    for K in range(5):
        path = enumerate_successors(build_subroutine_machine(K))
        p = path_length(K)
        if len(path) != p or p != 2 ** (K + 3) - 5:
            problems.append(f"K={K}: length {len(path)} vs {p}")
        eps_sites = [j for j, e in enumerate(path.eps, 1) if e == 1]
        if eps_sites != oracle_call_indices(K):
            problems.append(f"K={K}: eps support {eps_sites}")
        ns = path.ns
        if any(ns[j - 1] != 0 for j in range(1, 2 * K + 2)) or any(ns[j - 1] != 2**K for j in range(p - K, p + 1)):
            problems.append(f"K={K}: n_j boundary values")
        if K >= 1 and ns[2 * K + 2] != 1:
            problems.append(f"K={K}: n_(2K+3)={ns[2 * K + 2]}")
        if ns != [steps_exact(K, j) for j in range(1, p + 1)]:
            problems.append(f"K={K}: n_j disagrees with the closed count")
    verdict(5, not problems, "; ".join(problems) or "p(K), eps support and n_j boundaries agree for K=0..4")


def test_criterion_6_ccnot():
    g = build_cnot_network(2)
    T = cnot_path_length(2)
    H = ev.assemble(g, LAM)
    t = wd.time_grid(0, 30, 0.25)
    final = np.abs(wd.chain_amplitudes(t, T, LAM)[:, -1]) ** 2
    symbolic_ok, numeric_dev = True, 0.0
    for idx in range(8):
        bits = index_word(idx, 3)
        want = bits[:2] + ((-bits[2],) if bits[:2] == (1, 1) else (bits[2],))
        path = enumerate_successors(g, register=z_register(bits))
        symbolic_ok &= path.entries[-1].register == z_register(want) and path.entries[-1].site == g.n_sites
        states = ev.evolve_series(H, ev.initial_state(H.basis, register=ev.z_basis_register(bits)), t)
        got = ev.basis_probability(states, H.basis, word_index(want), g.n_sites)
        numeric_dev = max(numeric_dev, float(np.max(np.abs(got - final))))
    peak = wd.completion_peak(T, LAM)
    trend = [wd.completion_peak(n, LAM) for n in (4, 6, 8, 10, 12)]
    mono = all(b <= a for a, b in zip(trend, trend[1:]))
    ok = symbolic_ok and numeric_dev < 1e-8 and peak < 1 and mono
    verdict(
        6,
        ok,
        f"truth table {'ok' if symbolic_ok else 'wrong'}; final-site dev {numeric_dev:.1e}; "
        f"max completion {peak:.4f} (< 1); T=4..12 peaks {', '.join(f'{v:.3f}' for v in trend)}",
    )


def shipped_machines():
    """Every machine the package builds whose sector dimension is at most 4096."""
    out = []
    for mu in (1, 2, 3):
        for s in (3, 9, 17):
            out.append((build_linear_chain(mu, s), index_word(1, mu)))
        for K in range(4):
            out.append((build_subroutine_machine(K, mu=mu), index_word(0, mu)))
        for basis, variant in itertools.product(("z", "x", "a"), ("raiselower", "projector")):
            out.append((build_cnot_network(mu, basis, variant), index_word(1, mu) if basis == "a" else None))
        for K, variant in itertools.product(range(3), ("raiselower", "projector")):
            out.append((build_full_machine(mu, K, variant), index_word(5 % 2**mu, mu)))
    return [(g, a) for g, a in out if g.n_sites * 2**g.K * 2 ** (g.mu + 1) <= 4096]


@pytest.mark.slow
def test_criterion_7_conservation_audits():
    worst_res, worst_drift, failed = 0.0, 0.0, []
    machines = shipped_machines()
    for g, a in machines:
        H = ev.assemble(g, LAM, a)
        psi0 = ev.initial_state(H.basis)
        rep = ev.audit_conservation(H, psi0)
        worst_res = max(worst_res, max(rep.residuals().values()))
        drift = ev.norm_drift(ev.evolve_series(H, psi0, [0.0, 1.0, 10.0, 100.0]))
        worst_drift = max(worst_drift, drift)
        if not rep.passed or drift >= 1e-10:
            failed.append(g.name)
    ok = not failed
    verdict(7, ok, f"{len(machines)} machines; worst residual {worst_res:.1e} (< 1e-12); worst norm drift {worst_drift:.1e} (< 1e-10)"
            + (f"; failing {failed}" if failed else ""))


@pytest.mark.slow
def test_criterion_8_full_machine_observables():
    mu, K, a = 3, 1, (1, -1, 1)
    t = wd.time_grid(0, 100, 0.25)
    runs = {}
    for variant in ("raiselower", "projector"):
        g = build_full_machine(mu, K, variant)
        H = ev.assemble(g, LAM, a)
        psi0 = ev.initial_state(H.basis)
        runs[variant] = (g, H, psi0, ev.evolve_series(H, psi0, t))
    g, H, psi0, states = runs["raiselower"]
    assert H.dim == 1376

    # reflection: the mean logical step stops growing
    phi = ev.logical_path_vectors(H, psi0)
    mean_step = (np.abs(states @ phi.conj().T) ** 2) @ np.arange(1, len(phi) + 1)
    i_ref = int(np.argmax(np.diff(mean_step) < 0))
    t_ref = t[i_ref]

    rho = ev.counter_series(states, H.basis, 1)
    before = t < t_ref
    i_rise = int(np.argmax(before & (rho > -0.5)))
    rose = bool(before[i_rise] and rho[i_rise] > -0.5)
    back = rose and bool(np.any(before[i_rise:] & (rho[i_rise:] < -0.99)))
    rho_ok = abs(rho[0] + 1) < 1e-12 and rose and back

    # ballistic window: until the front reaches the first backward link of the path
    # a logical state may cover several sites (one per branch); track the lowest one
    lowest = [int(np.nonzero(np.abs(H.basis.reshape(v)).sum(axis=(1, 2)) > 1e-12)[0].min()) + 1 for v in phi]
    j_back = next(j for j in range(1, len(lowest)) if lowest[j] < lowest[j - 1])
    window = t <= j_back / LAM
    q = ev.cursor_series(states, H.basis)
    q_slope = float(np.polyfit(t[window], q[window], 1)[0])
    step_slope = float(np.polyfit(t[window], mean_step[window], 1)[0])
    slope_ok = abs(q_slope - 1) <= 0.15

    p_rl = ev.register_target_series(states, H.basis, a).mean()
    _, Hp, _, states_p = runs["projector"]
    p_pr = ev.register_target_series(states_p, Hp.basis, a).mean()
    dom_ok = p_pr > p_rl

    ok = rho_ok and slope_ok and dom_ok
    verdict(
        8,
        ok,
        f"rho3(1): start {rho[0]:+.3f}, rises to {rho[i_rise]:+.2f}, back below -0.99 before t={t_ref:.2f} "
        f"[{'ok' if rho_ok else 'out'}]; <Q> slope {q_slope:.3f} on t<={j_back / LAM:.1f} (1 +- 0.15) "
        f"[{'ok' if slope_ok else 'out'}], mean-step slope {step_slope:.3f}; "
        f"time-avg P_a projector {p_pr:.4f} vs raise/lower {p_rl:.4f} [{'ok' if dom_ok else 'out'}]",
    )


@pytest.mark.slow
def test_criterion_9_determinism(tmp_path):
    differing = []
    for fig in FIGURES:
        blobs = []
        for rep in (1, 2):
            out = tmp_path / f"run{rep}"
            res = subprocess.run([sys.executable, "-m", "cursorwalk", "figure", str(fig), "--outdir", str(out)],
                                 capture_output=True, text=True)
            assert res.returncode == 0, res.stderr
            blobs.append((out / f"fig{fig}.csv").read_bytes())
        if blobs[0] != blobs[1]:
            differing.append(fig)
    verdict(9, not differing, f"{len(FIGURES)} figure commands, byte-identical reruns" if not differing else f"differ: {differing}")
