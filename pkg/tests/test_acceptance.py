"""Acceptance criteria 1-9, each at its stated tolerance and runtime budget.

A summary line per criterion is printed at the end of the pytest session.
"""
import math
import time

import numpy as np
import pytest

from nuqw import (
    CoinField,
    CoinSpec,
    DisorderSpec,
    FixedSteps,
    Frame,
    SurvivalBelow,
    WalkerState,
    average_displacement,
    disorder_displacement,
    disorder_edge,
    dwell_time,
    edge_experiment,
    evolve,
    floquet_step,
    ingest_counts,
    invariant_pair,
    lattice_half_width,
    monte_carlo_oracle,
    run_walk,
    similarity,
    sweep_theta1,
    winding_number,
)
from nuqw.core import detection_operator, loss_operator
from nuqw.dense import dense_evolve
from nuqw.errors import DegenerateBand
from nuqw.experiments import EDGE_INNER, EDGE_OUTER, RegionLayout, counts_from_record

from .conftest import ACCEPTANCE_RESULTS

PI = math.pi
THETA2 = PI / 4
SWEEP = sweep_theta1()
# transitions along theta2 = pi/4 sit at theta1 = +-pi/4, between sweep indices 2|3 and 9|10
PLATEAUS = [range(0, 3), range(3, 10), range(10, 13)]
DEEP = [0, 6, 12]  # at least pi/8 from either transition
EDGE_X = 4
EDGE_T = 5


def report(number, passed, detail):
    ACCEPTANCE_RESULTS.append((number, bool(passed), detail))
    assert passed, f"criterion {number}: {detail}"


@pytest.fixture(scope="module", autouse=True)
def warm_kernels():
    """Compile (or load cached) kernels so runtime budgets measure the computation."""
    L = 4
    field = CoinField.homogeneous(CoinSpec(0.1, 0.2), L)
    evolve(WalkerState.localized(L), field, 0.5, Frame.PRIME, FixedSteps(1))
    monte_carlo_oracle(WalkerState.localized(L), field, 0.5, Frame.PRIME, 1, 10)
    winding_number(CoinSpec(0.1, 0.2), 0.5)


def test_criterion_1_kraus_bookkeeping():
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    L = 8
    worst_step, worst_kraus = 0.0, 0.0
    for _ in range(1000):
        a, b, p = rng.uniform(-PI, PI), rng.uniform(-PI, PI), rng.uniform()
        frame = Frame.PRIME if rng.random() < 0.5 else Frame.DOUBLE_PRIME
        amp = np.zeros((2 * L + 1, 2), complex)
        amp[L - 3 : L + 4] = rng.normal(size=(7, 2)) + 1j * rng.normal(size=(7, 2))
        amp /= np.linalg.norm(amp)
        state = WalkerState(amp)
        field = CoinField.homogeneous(CoinSpec(a, b), L)
        out, row = floquet_step(state, field, p, frame)
        worst_step = max(worst_step, abs(state.norm2 - out.norm2 - row.sum()))
        m, me = loss_operator(p), detection_operator(p)
        worst_kraus = max(worst_kraus, np.max(np.abs(m.T @ m + me.T @ me - np.eye(2))))
    elapsed = time.perf_counter() - start
    ok = worst_step <= 1e-12 and worst_kraus <= 1e-12 and elapsed < 5
    report(1, ok, f"max step residual {worst_step:.2e}, max Kraus residual {worst_kraus:.2e}, {elapsed:.2f}s (< 5s)")


def test_criterion_2_dense_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(50):
        L = int(rng.integers(4, 13))
        T = int(min(6, (L - 1) // 2))
        t1, t2 = rng.uniform(-PI, PI, 2 * L + 1), rng.uniform(-PI, PI, 2 * L + 1)
        p = rng.uniform()
        frame = Frame.PRIME if rng.random() < 0.5 else Frame.DOUBLE_PRIME
        amp = np.zeros((2 * L + 1, 2), complex)
        amp[L] = rng.normal(size=2) + 1j * rng.normal(size=2)
        rec = evolve(WalkerState(amp), CoinField.explicit(t1, t2), p, frame, FixedSteps(T), keep_states=True)
        states, rows = dense_evolve(amp, t1, t2, p, frame, T)
        for got, want in zip(rec.states[1:], states):
            worst = max(worst, np.max(np.abs(got.amplitudes - want)))
        worst = max(worst, np.max(np.abs(rec.P - rows)))
    elapsed = time.perf_counter() - start
    report(2, worst <= 1e-10 and elapsed < 30, f"max entrywise difference {worst:.2e} over 50 configurations, {elapsed:.2f}s (< 30s)")


def test_criterion_3_invariant_pairs():
    start = time.perf_counter()
    cases = [
        ((PI / 8, 3 * PI / 16), (1, -1)),
        ((PI / 16, PI / 8), (1, -1)),
        ((-7 * PI / 16, -3 * PI / 8), (-1, -1)),
        ((-5 * PI / 8, -9 * PI / 16), (-1, 1)),
    ]
    got = [invariant_pair(CoinSpec(*angles), 2 / 3).pair() for angles, _ in cases]
    elapsed = time.perf_counter() - start
    ok = got == [want for _, want in cases] and elapsed < 5
    report(3, ok, f"pairs {got}, {elapsed:.2f}s (< 5s)")


def test_criterion_4_quantized_displacement():
    start = time.perf_counter()
    problems = []
    worst_longrun = 0.0
    for p in (1.0, 2 / 3, 9 / 25):
        for frame in Frame:
            nu = {}
            for plateau in PLATEAUS:
                mid = list(plateau)[len(plateau) // 2]
                w = winding_number(CoinSpec(SWEEP[mid], THETA2), p, frame)
                for i in plateau:
                    nu[i] = w.value
            d7 = []
            for i, t1 in enumerate(SWEEP):
                rec = run_walk(CoinSpec(t1, THETA2), p, frame, FixedSteps(7))
                cumulative = np.cumsum(rec.P @ rec.positions)
                d7.append(cumulative[-1])
                if i not in DEEP:
                    continue
                long = average_displacement(run_walk(CoinSpec(t1, THETA2), p, frame, SurvivalBelow(1e-8)))
                dev = abs(long.value - nu[i])
                worst_longrun = max(worst_longrun, dev)
                if not long.converged or dev > 0.05:
                    problems.append(f"long-run {long.value:.4f} vs {nu[i]} at p={p:.3g} {frame.value} theta1={t1:.3f}")
                gaps = np.abs(cumulative - nu[i])
                if nu[i] != 0 and np.any(np.diff(gaps) > 1e-12):
                    problems.append(f"non-monotone approach at p={p:.3g} {frame.value} theta1={t1:.3f}")
                if nu[i] == 0 and np.max(np.abs(cumulative)) > 0.1:
                    problems.append(f"trivial plateau drifts at p={p:.3g} {frame.value} theta1={t1:.3f}")
            for plateau in PLATEAUS:
                idx = list(plateau)
                dev = np.array([abs(d7[i] - nu[i]) for i in idx])
                edge_dev = max(dev[0] if idx[0] > 0 else 0.0, dev[-1] if idx[-1] < 12 else 0.0)
                if edge_dev < dev.max() - 1e-12:
                    problems.append(f"largest 7-step deviation not next to a transition at p={p:.3g} {frame.value}")
    elapsed = time.perf_counter() - start
    ok = not problems and elapsed < 120
    detail = f"max long-run |<dx> - nu| {worst_longrun:.2e} (<= 0.05); 7-step plateau properties hold; {elapsed:.1f}s (< 120s)"
    report(4, ok, detail if not problems else "; ".join(problems[:4]))


def test_criterion_5_edge_states():
    start = time.perf_counter()
    q = {case: edge_experiment(RegionLayout(EDGE_INNER, EDGE_OUTER[case])) for case in "abc"}
    cell = {case: r.at(EDGE_X, EDGE_T) for case, r in q.items()}
    enhanced = all(cell[c] >= 3 * cell["a"] for c in "bc")
    # the walker moves two sites per step, so the occupied neighbours of x=4 are x=2 and x=6
    a = q["a"]
    neighbours = (a.at(EDGE_X - 2, EDGE_T), a.at(EDGE_X + 2, EDGE_T))
    not_peaked = cell["a"] <= max(neighbours)
    elapsed = time.perf_counter() - start
    detail = (
        f"Q(4,5): a={cell['a']:.4f} b={cell['b']:.4f} c={cell['c']:.4f} (b,c >= 3a: {enhanced}); "
        f"case a neighbours Q(2,5)={neighbours[0]:.4f} Q(6,5)={neighbours[1]:.4f} (no local max at 4: {not_peaked}); "
        f"{elapsed:.2f}s (< 10s)"
    )
    report(5, enhanced and not_peaked and elapsed < 10, detail)


def test_criterion_6_disorder_robustness():
    start = time.perf_counter()
    spec = DisorderSpec(PI / 20, seed=0, ensemble_size=10)
    pts = disorder_displacement(THETA2, SWEEP, spec, p=2 / 3, steps=5, frame=Frame.PRIME)
    devs = {i: abs(pts[i].mean - pts[i].clean) for i in DEEP}
    plateau_ok = all(d <= 0.15 for d in devs.values())
    clean_a = edge_experiment(RegionLayout(EDGE_INNER, EDGE_OUTER["a"])).at(EDGE_X, EDGE_T)
    peaks = {}
    for case in "bc":
        res = disorder_edge(RegionLayout(EDGE_INNER, EDGE_OUTER[case]), spec)
        final = res.Q_mean[-1]
        peaks[case] = (res.at(EDGE_X, EDGE_T), int(res.positions[np.argmax(final)]))
    peak_ok = all(v >= 3 * clean_a and x == EDGE_X for v, x in peaks.values())
    elapsed = time.perf_counter() - start
    detail = (
        "deep-point |mean - clean| "
        + ", ".join(f"{SWEEP[i]:+.3f}:{d:.3f}" for i, d in devs.items())
        + " (<= 0.15); "
        + ", ".join(f"case {c} mean Q(4,5)={v:.3f} argmax x={x}" for c, (v, x) in peaks.items())
        + f"; {elapsed:.1f}s (< 120s)"
    )
    report(6, plateau_ok and peak_ok and elapsed < 120, detail)


def test_criterion_7_winding_stability():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    checked, problems = 0, []
    worst = 0.0
    while checked < 25:
        coin = CoinSpec(rng.uniform(-PI, PI), rng.uniform(-PI, PI))
        p = rng.uniform()
        frame = Frame.PRIME if rng.random() < 0.5 else Frame.DOUBLE_PRIME
        try:
            ws = [winding_number(coin, p, frame, grid) for grid in (128, 256, 512)]
        except DegenerateBand:
            continue
        if not all(w.valid for w in ws):
            continue
        checked += 1
        if len({w.value for w in ws}) != 1:
            problems.append(f"{coin} p={p:.3f}: {[w.value for w in ws]}")
        for w in ws:
            worst = max(worst, abs(w.angle_sum - 2 * PI * w.value))
    elapsed = time.perf_counter() - start
    ok = not problems and worst <= 1e-6 * 2 * PI and elapsed < 10
    report(7, ok, f"{checked} points stable under 128/256/512; max angle residual {worst:.2e} rad; {elapsed:.2f}s (< 10s)" + "; ".join(problems))


def test_criterion_8_monte_carlo():
    start = time.perf_counter()
    configs = [
        (CoinSpec(PI / 8, 3 * PI / 16), 2 / 3, Frame.PRIME, 4),
        (CoinSpec(-3 * PI / 7, PI / 4), 1.0, Frame.DOUBLE_PRIME, 5),
        (CoinSpec(1.1, -0.4), 9 / 25, Frame.PRIME, 6),
    ]
    fractions = []
    for i, (coin, p, frame, steps) in enumerate(configs):
        L = lattice_half_width(steps)
        field = CoinField.homogeneous(coin, L)
        init = WalkerState.localized(L)
        exact = evolve(init, field, p, frame, FixedSteps(steps)).P
        mc = monte_carlo_oracle(init, field, p, frame, steps, 100_000, seed=i)
        se = np.sqrt(exact * (1 - exact) / mc.trials)
        mask = exact > 0
        fractions.append(float(np.mean(np.abs(mc.P_hat - exact)[mask] <= 4 * se[mask])))
    elapsed = time.perf_counter() - start
    ok = all(f >= 0.95 for f in fractions) and elapsed < 60
    report(8, ok, f"fraction of nonzero cells within 4 SE: {[round(f, 4) for f in fractions]} (>= 0.95); {elapsed:.2f}s (< 60s)")


def test_criterion_9_similarity_substitute():
    q = edge_experiment(RegionLayout(EDGE_INNER, EDGE_OUTER["b"])).Q[-1]
    self_sim = similarity(q, q)
    half = similarity([1.0, 0.0], [0.5, 0.5])
    rec = run_walk(CoinSpec(PI / 8, 3 * PI / 16), 2 / 3, Frame.PRIME, FixedSteps(5), keep_states=True)
    res = ingest_counts(counts_from_record(rec))
    diffs = (
        float(np.max(np.abs(res.P_exp - rec.P))),
        abs(res.displacement - average_displacement(rec).value),
        abs(res.dwell_time - dwell_time(rec).value),
    )
    ok = abs(self_sim - 1) <= 1e-12 and half == 0.5 and max(diffs) <= 1e-12
    report(9, ok, f"S(Q,Q)-1={self_sim - 1:.1e}, half-overlap={half!r}, round-trip max diff {max(diffs):.1e}")
