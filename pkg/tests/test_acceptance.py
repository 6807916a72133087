"""Acceptance criteria: one test and one printed pass/fail line per criterion.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines as they
print; under plain pytest the assertions alone carry the verdicts.
"""

import math
import random
import time

import numpy as np

from sliceqos.curves import (
    RateLatency,
    TokenBucket,
    backlog_bound,
    deconvolution_value_scan,
    delay_bound,
    horizontal_deviation_scan,
    output_bound,
    vertical_deviation_scan,
)
from sliceqos.cyclic import Fixed, Overwrite, Pmf, Poisson, shared_pool_reliability, utilization
from sliceqos.e2e import sweep_latency, sweep_reliability
from sliceqos.scenario import load_case_study
from sliceqos.sim import SimConfig, simulate_cycle_spec, simulate_queues


def _verdict(n: int, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    assert ok, f"criterion {n}: {detail}"


def test_criterion_1_output_burst_and_delay():
    start = time.monotonic()
    arrival = TokenBucket(32.0, 32.0)
    service = RateLatency(35.0, 128.0 / 35.0)
    burst = output_bound(arrival, service).burst
    delay = delay_bound(arrival, service)
    ok = abs(burst - 149.03) <= 0.5 and abs(delay - 4.571) <= 0.01
    ok = ok and time.monotonic() - start < 1.0
    _verdict(1, ok, f"output burst {burst:.3f} B (149.03±0.5), delay {delay:.4f} ms (4.571±0.01)")


def test_criterion_2_control_reliability_at_reference_rate():
    start = time.monotonic()
    scn = load_case_study()
    failure = sweep_reliability(scn, [4e-6])[0][1]
    ratio = failure / 1e-6
    ok = 1 / 1.05 <= ratio <= 1.05 and time.monotonic() - start < 1.0
    _verdict(2, ok, f"control failure {failure:.6e} at rate 4e-6 (target 1e-6, x{ratio:.4f})")


def test_criterion_3_reliability_floors():
    start = time.monotonic()
    scn = load_case_study()
    _, control, alarm = sweep_reliability(scn, [1e-15])[0]
    control_floor = 1e-9
    alarm_floor = 1.0 - (1.0 - 1e-9) ** 3
    ok = abs(control - control_floor) <= 1e-12 and abs(alarm - alarm_floor) <= 1e-12
    ok = ok and time.monotonic() - start < 1.0
    _verdict(
        3,
        ok,
        f"floors: control {control:.6e} (1e-9), alarm {alarm:.6e} ({alarm_floor:.6e})",
    )


def test_criterion_4_latency_asymptote_and_slope_ordering():
    start = time.monotonic()
    scn = load_case_study()
    grid = [1e-9] + list(np.geomspace(1e-3, 30.0, 25))
    rows = sweep_latency(scn, grid)
    alarm = [r[1] for r in rows]
    patient = [r[2] for r in rows]
    ok = all(a is not None and p is not None for a, p in zip(alarm, patient))
    ok = ok and abs(alarm[0] - 1.0) <= 1e-6
    slopes_ok = all(
        (patient[i + 1] - patient[i]) >= (alarm[i + 1] - alarm[i]) - 1e-12
        for i in range(len(grid) - 1)
    )
    ok = ok and slopes_ok and time.monotonic() - start < 5.0
    _verdict(
        4,
        ok,
        f"alarm delay {alarm[0]:.9f} ms at vanishing bound (1.0±1e-6); "
        f"low-priority slope dominates at all {len(grid)} grid points: {slopes_ok}",
    )


def test_criterion_5_utilization():
    start = time.monotonic()
    u_overwrite = utilization(Overwrite("control"), [Poisson(1.0 / 60000.0, 32.0)])
    u_fixed = utilization(Fixed(32.0), [Poisson(1.0 / 60000.0, 32.0)])
    ok = u_overwrite == 1.0 and abs(u_fixed - 1.0 / 60000.0) <= 1e-8
    ok = ok and time.monotonic() - start < 1.0
    _verdict(
        5,
        ok,
        f"overwrite utilization {u_overwrite} (exactly 1), "
        f"fixed 32 B at one alarm per 60 s: {u_fixed:.6e} (1/60000 ± 1e-8)",
    )


def test_criterion_6_oracle_equivalence():
    start = time.monotonic()
    rng = random.Random(2024)
    worst = 0.0
    for _ in range(100):
        ac = TokenBucket(rng.uniform(0.05, 10.0), rng.uniform(0.0, 100.0))
        sc = RateLatency(ac.rate * rng.uniform(1.05, 5.0), rng.uniform(0.0, 20.0))
        pairs = [
            (delay_bound(ac, sc), horizontal_deviation_scan(ac, sc)),
            (backlog_bound(ac, sc), vertical_deviation_scan(ac, sc)),
        ]
        out = output_bound(ac, sc)
        for t in (0.0, 1.0, 5.0):
            pairs.append((out.curve.value(t), deconvolution_value_scan(ac, sc, t)))
        for closed, scanned in pairs:
            worst = max(worst, abs(closed - scanned) / max(1.0, abs(closed)))
    closed_ok = worst <= 1e-9

    pool_ok = True
    for _ in range(25):
        models = []
        for _ in range(rng.randint(1, 4)):  # K <= 4 applications
            k = rng.randint(1, 5)  # counts up to n_max <= 5
            raw = [rng.randint(0, 4) for _ in range(k)] + [1]
            scale = 2 ** math.ceil(math.log2(sum(raw)))
            raw[-1] += scale - sum(raw)
            models.append(Pmf(tuple(r / scale for r in raw), float(rng.randint(8, 64))))
        pool = float(rng.randint(16, 512))
        combos = [(1.0, 0.0)]
        for m in models:
            combos = [
                (p * q, b + i * m.frame_size)
                for p, b in combos
                for i, q in enumerate(m.probs)
            ]
        brute = math.fsum(p for p, b in combos if b <= pool + 1e-9)
        pool_ok = pool_ok and shared_pool_reliability(models, pool) == brute

    elapsed = time.monotonic() - start
    ok = closed_ok and pool_ok and elapsed < 30.0
    _verdict(
        6,
        ok,
        f"closed form vs scans: worst relative error {worst:.2e} over 100 pairs "
        f"(<=1e-9); shared pool equals enumeration exactly: {pool_ok}; {elapsed:.1f}s",
    )


def test_criterion_7_simulation_dominance_and_agreement():
    start = time.monotonic()
    scn = load_case_study()
    report = simulate_queues(
        SimConfig(scn, seed=7, mode="queue-latency", n_frames=1_000_000)
    )
    frames = sum(d.frames for d in report.delays)
    dominance_ok = frames >= 1_000_000 and report.bound_violations == 0

    agree_ok = True
    worst_sigma = 0.0
    for lam in (0.01, 0.1, 0.5):
        spec = scn.cycle_spec("factory1")
        scaled = type(spec)(
            spec.cycle_time,
            spec.total_resources,
            tuple(
                type(a)(a.name, Poisson(lam, a.model.frame_size), a.scheme)
                if isinstance(a.model, Poisson)
                else a
                for a in spec.apps
            ),
        )
        for row in simulate_cycle_spec(scaled, seed=int(lam * 1000) + 1, n_cycles=10_000_000):
            worst_sigma = max(worst_sigma, row.sigmas)
            agree_ok = agree_ok and row.sigmas <= 4.0

    elapsed = time.monotonic() - start
    ok = dominance_ok and agree_ok and elapsed < 300.0
    _verdict(
        7,
        ok,
        f"{frames} frames, {report.bound_violations} bound violations; "
        f"Monte Carlo worst deviation {worst_sigma:.2f} sigma over "
        f"lambda in {{0.01, 0.1, 0.5}} at 1e7 cycles; {elapsed:.1f}s",
    )
