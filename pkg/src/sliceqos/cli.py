"""Command-line front end.

Subcommands:

* ``analyze``            per-flow delay/reliability verdict table
* ``reliability-sweep``  CSV of failure probabilities over the alarm rate
* ``latency-sweep``      CSV of delay bounds over the admitted alarm bound
* ``simulate``           stochastic validation run with a summary table
* ``check``              internal oracle suite (closed form vs numeric scan)

Exit codes: 0 all requirements pass, 1 a requirement or validation check
fails, 2 input error (bad file, bad flag). CSV uses dot decimals, ``\\n``
newlines, and nine significant digits; delay entries with no finite bound
emit the token ``unbounded``.
"""

from __future__ import annotations

import argparse
import math
import random
import sys

import numpy as np

from . import cyclic as cy
from .curves import (
    RateLatency,
    TokenBucket,
    curves_equal_on_grid,
    delay_bound,
    horizontal_deviation_scan,
    leftover_scan,
    leftover_service,
    min_plus_convolution,
    output_bound,
    deconvolution_value_scan,
)
from .e2e import analyze_scenario, sweep_latency, sweep_reliability
from .scenario import ScenarioError, load_case_study, parse_scenario
from .sim import SimConfig, simulate_cycles, simulate_queues


def _fmt(value: float | None) -> str:
    if value is None or (isinstance(value, float) and math.isinf(value)):
        return "unbounded"
    return f"{value:.8e}"


def parse_grid(text: str) -> list[float]:
    """MIN:MAX:POINTS with an optional :log suffix."""
    parts = text.split(":")
    if len(parts) == 4 and parts[3] == "log":
        log = True
        parts = parts[:3]
    elif len(parts) == 3:
        log = False
    else:
        raise ValueError(f"grid must be MIN:MAX:POINTS[:log], got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
        points = int(parts[2])
    except ValueError:
        raise ValueError(f"grid must be MIN:MAX:POINTS[:log], got {text!r}") from None
    if points < 2:
        raise ValueError("grid needs at least 2 points")
    if lo >= hi:
        raise ValueError("grid MIN must be below MAX")
    if log:
        if lo <= 0:
            raise ValueError("log grid needs positive endpoints")
        return list(np.geomspace(lo, hi, points))
    return list(np.linspace(lo, hi, points))


def _load(args) -> object:
    if args.scenario is None:
        return load_case_study()
    with open(args.scenario, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def _emit(args, lines: list[str]) -> None:
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------


def cmd_analyze(args) -> int:
    scn = _load(args)
    results = analyze_scenario(scn)
    rows = ["flow,delay_bound_ms,reliability,latency_verdict,reliability_verdict"]
    width = max(len(r.flow) for r in results)
    all_ok = True
    for r in results:
        lat = "PASS" if r.latency_ok else "FAIL"
        rel = "PASS" if r.reliability_ok else "FAIL"
        all_ok = all_ok and r.latency_ok and r.reliability_ok
        rows.append(
            f"{r.flow},{_fmt(r.delay_bound_ms)},{_fmt(r.delivery_reliability)},{lat},{rel}"
        )
        print(
            f"{r.flow:<{width}}  delay {_fmt(r.delay_bound_ms)} ms "
            f"(req {r.latency_req_ms:g}: {lat})  "
            f"reliability {_fmt(r.delivery_reliability)} "
            f"(req {r.reliability_req:g}: {rel})"
        )
    if args.out:
        _emit(args, rows)
    print("overall:", "PASS" if all_ok else "FAIL")
    return 0 if all_ok else 1


def cmd_reliability_sweep(args) -> int:
    scn = _load(args)
    grid = parse_grid(args.grid)
    rows = sweep_reliability(scn, grid)
    lines = ["lambda,control_failure,alarm_failure"]
    lines += [f"{_fmt(lam)},{_fmt(c)},{_fmt(a)}" for lam, c, a in rows]
    _emit(args, lines)
    return 0


def cmd_latency_sweep(args) -> int:
    scn = _load(args)
    grid = parse_grid(args.grid)
    rows = sweep_latency(scn, grid)
    lines = ["r_alarms,alarm_delay_ms,patient_info_delay_ms"]
    lines += [f"{_fmt(r)},{_fmt(a)},{_fmt(p)}" for r, a, p in rows]
    _emit(args, lines)
    return 0


def cmd_simulate(args) -> int:
    scn = _load(args)
    config = SimConfig(
        scenario=scn,
        seed=args.seed,
        mode=args.mode,
        n_cycles=args.cycles,
        n_frames=args.frames,
        lam=args.lam,
        link_loss=args.link_loss,
    )
    ok = True
    if config.mode == "cyclic-reliability":
        report = simulate_cycles(config)
        lines = ["metric,empirical,analytic,stderr,n"]
        for m in report.metrics:
            lines.append(f"{m.name},{_fmt(m.empirical)},{_fmt(m.analytic)},{_fmt(m.stderr)},{m.n}")
            agree = m.sigmas <= 4.0
            ok = ok and agree
            print(
                f"{m.name}: empirical {_fmt(m.empirical)} vs analytic {_fmt(m.analytic)} "
                f"({m.sigmas:.2f} sigma, n={m.n}) {'OK' if agree else 'DISAGREE'}"
            )
    else:
        report = simulate_queues(config)
        lines = ["flow,frames,mean_delay_ms,max_delay_ms,bound_ms,violations"]
        for d in report.delays:
            lines.append(
                f"{d.flow},{d.frames},{_fmt(d.mean_delay_ms)},{_fmt(d.max_delay_ms)},"
                f"{_fmt(d.bound_ms)},{d.violations}"
            )
            ok = ok and d.violations == 0
            print(
                f"{d.flow}: max {_fmt(d.max_delay_ms)} ms <= bound {_fmt(d.bound_ms)} ms "
                f"({d.frames} frames, {d.violations} violations)"
            )
    for note in report.notes:
        print(f"note: {note}")
    if args.out:
        _emit(args, lines)
    print("simulation:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def run_self_check(seed: int = 0, trials: int = 50) -> list[tuple[str, bool]]:
    """Closed forms against numeric scans, analytic models against enumeration."""
    rng = random.Random(seed)
    checks: list[tuple[str, bool]] = []

    ok = True
    for _ in range(trials):
        ac = TokenBucket(rng.uniform(0.1, 5.0), rng.uniform(0.0, 50.0))
        sc = RateLatency(ac.rate * rng.uniform(1.1, 4.0), rng.uniform(0.0, 10.0))
        d = delay_bound(ac, sc)
        d_scan = horizontal_deviation_scan(ac.curve, sc.curve)
        ok = ok and abs(d - d_scan) <= 1e-9 * max(1.0, abs(d))
    checks.append(("delay bound closed form vs horizontal-deviation scan", ok))

    ok = True
    for _ in range(trials):
        ac = TokenBucket(rng.uniform(0.1, 5.0), rng.uniform(0.0, 50.0))
        sc = RateLatency(ac.rate * rng.uniform(1.1, 4.0), rng.uniform(0.0, 10.0))
        out = output_bound(ac, sc)
        horizon = 4.0 * (sc.latency + 10.0)
        for t in (0.0, 0.5, 1.7, horizon / 2, horizon):
            v = deconvolution_value_scan(ac, sc, t, u_max=horizon)
            ok = ok and abs(out.curve.value(t) - v) <= 1e-9 * max(1.0, abs(v))
    checks.append(("output bound closed form vs deconvolution scan", ok))

    ok = True
    for _ in range(trials):
        sc = RateLatency(rng.uniform(1.0, 20.0), rng.uniform(0.0, 5.0))
        hp = TokenBucket(sc.rate * rng.uniform(0.05, 0.9), rng.uniform(0.0, 30.0))
        lo = leftover_service(sc, hp)
        ts = np.linspace(0.0, 4.0 * (sc.latency + 10.0), 2001)
        got = lo.curve.values(ts)
        want = leftover_scan(sc, hp, ts)
        scale = np.maximum(1.0, np.abs(want))
        ok = ok and bool(np.all(np.abs(got - want) <= 1e-9 * scale))
    checks.append(("leftover service closed form vs accumulate scan", ok))

    ok = True
    for _ in range(trials):
        a = RateLatency(rng.uniform(1.0, 10.0), rng.uniform(0.0, 5.0))
        b = RateLatency(rng.uniform(1.0, 10.0), rng.uniform(0.0, 5.0))
        conv = min_plus_convolution(a.curve, b.curve)
        expect = RateLatency(min(a.rate, b.rate), a.latency + b.latency).curve
        ok = ok and curves_equal_on_grid(
            conv, expect, horizon=4.0 * (a.latency + b.latency + 10.0)
        )
    checks.append(("rate-latency convolution closed form", ok))

    # Shared pool against exhaustive enumeration with dyadic probabilities.
    ok = True
    for _ in range(10):
        models = []
        for _ in range(rng.randint(2, 3)):
            k = rng.randint(1, 3)
            raw = [rng.randint(1, 8) for _ in range(k + 1)]
            total = sum(raw)
            models.append(
                cy.Pmf(tuple(r / total for r in raw), float(rng.randint(8, 64)))
            )
        pool = float(rng.randint(16, 256))
        analytic = cy.shared_pool_reliability(models, pool)
        brute = 0.0
        combos = [(1.0, 0.0)]
        for m in models:
            combos = [
                (p * q, b + i * m.frame_size)
                for p, b in combos
                for i, q in enumerate(m.probs)
            ]
        brute = sum(p for p, b in combos if b <= pool + 1e-9)
        ok = ok and abs(analytic - brute) <= 1e-12
    checks.append(("shared pool reliability vs enumeration", ok))

    ok = True
    for _ in range(10):
        r_d = rng.randint(1, 6)
        mean = rng.uniform(0.05, 2.0)
        model = cy.Poisson(mean, 32.0)
        pmf = model.frame_pmf()
        survive = sum(p * max(r_d - a, 0) / r_d for a, p in enumerate(pmf))
        analytic = cy.overwrite_deterministic_reliability(
            cy.Deterministic(r_d, 128.0), [model]
        )
        ok = ok and abs(analytic - survive) <= 1e-12
    checks.append(("overwrite survival vs per-frame enumeration", ok))

    return checks


def cmd_check(args) -> int:
    checks = run_self_check(args.seed)
    all_ok = True
    for name, ok in checks:
        all_ok = all_ok and ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    print("check:", "PASS" if all_ok else "FAIL")
    return 0 if all_ok else 1


# ---------------------------------------------------------------------------
# Argument parsing.
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sliceqos",
        description="Analytic QoS bounds and validation for sliced factory networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid_default=None):
        p.add_argument("--scenario", help="scenario file (default: bundled case study)")
        p.add_argument("--out", help="write CSV to this path")
        if grid_default is not None:
            p.add_argument(
                "--grid",
                default=grid_default,
                help="sweep grid MIN:MAX:POINTS[:log]",
            )

    p = sub.add_parser("analyze", help="per-flow verdict table")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("reliability-sweep", help="failure probabilities over alarm rate")
    common(p, grid_default="1e-6:1:61:log")
    p.set_defaults(func=cmd_reliability_sweep)

    p = sub.add_parser("latency-sweep", help="delay bounds over admitted alarm bound")
    common(p, grid_default="1:20000:81:log")
    p.set_defaults(func=cmd_latency_sweep)

    p = sub.add_parser("simulate", help="stochastic validation run")
    common(p)
    p.add_argument(
        "--mode",
        choices=("cyclic-reliability", "queue-latency"),
        default="cyclic-reliability",
    )
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--cycles", type=int, default=1_000_000)
    p.add_argument("--frames", type=int, default=1_000_000)
    p.add_argument("--lam", type=float, default=None, help="scaled alarms per cycle")
    p.add_argument(
        "--link-loss", type=float, default=None, help="scaled per-link loss probability"
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="run the internal oracle suite")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help; keep the contract.
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
