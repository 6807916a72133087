"""End-to-end composition: verdicts, delay propagation, and sweep tables."""


import pytest

from sliceqos.curves import UnstableSystemError
from sliceqos.e2e import (
    E2EAnalysis,
    analyze_scenario,
    path_delay,
    path_reliability,
    sweep_latency,
    sweep_reliability,
)
from sliceqos.scenario import load_case_study


@pytest.fixture(scope="module")
def case():
    return load_case_study()


def test_path_reliability_composes_and_validates():
    assert path_reliability(0.99, [0.9, 0.5]) == pytest.approx(0.4455)
    with pytest.raises(ValueError):
        path_reliability(1.5, [])
    with pytest.raises(ValueError):
        path_reliability(0.5, [-0.1])


def test_case_study_all_requirements_pass(case):
    results = analyze_scenario(case)
    assert len(results) == 70
    for r in results:
        assert r.latency_ok, f"{r.flow}: {r.delay_bound_ms} > {r.latency_req_ms}"
        assert r.reliability_ok, f"{r.flow}: {r.delivery_reliability}"


def test_control_delay_is_one_cycle(case):
    r = path_delay(case, "control-cmd@factory1")
    assert r.delay_bound_ms == 1.0
    assert [h.kind for h in r.per_hop] == ["cyclic"]
    assert r.delivery_reliability == pytest.approx(1.0 - 1e-9, abs=1e-15)


def test_alarm_delay_decomposition(case):
    r = path_delay(case, "sensor-alarms@factory1")
    hops = r.per_hop
    assert [h.kind for h in hops] == ["cyclic", "switched", "switched"]
    assert hops[0].delay_ms == 1.0
    # Uplink carries only this unit's alarms at high priority: the 4x32 B
    # egress burst over 12.5 kB/ms.
    assert hops[1].delay_ms == pytest.approx(128.0 / 12500.0)
    # The backbone aggregates ten units' alarm bursts; each entering burst
    # was inflated by the 128 B/ms egress rate times the uplink delay.
    agg_burst = 10 * (128.0 + 128.0 * hops[1].delay_ms)
    assert hops[2].delay_ms == pytest.approx(agg_burst / 12500.0)
    assert r.delay_bound_ms == pytest.approx(sum(h.delay_ms for h in hops))


def test_output_burst_grows_along_path(case):
    r = path_delay(case, "sensor-alarms@factory1")
    sw = [h for h in r.per_hop if h.kind == "switched"]
    assert sw[0].arrival_out.burst > sw[0].arrival_in.burst
    assert sw[1].arrival_in.burst == pytest.approx(sw[0].arrival_out.burst)


def test_low_priority_sees_leftover_service(case):
    analysis = E2EAnalysis(case)
    totals, details = analysis.delays()
    # patient-info-request is low priority behind the alarm bursts.
    low = totals["patient-info-request@factory1"]
    assert low > totals["sensor-alarms@factory1"] - 1.0  # minus the cyclic hop
    # More admitted alarms push the low-priority delay up.
    more, _ = analysis.delays(r_alarms=20.0)
    assert more["patient-info-request@factory1"] > low


def test_unstable_hop_raises_with_hop_name(case):
    # 1e6 admitted alarm frames per cycle overload the unit's own uplink.
    with pytest.raises(UnstableSystemError, match="uplink@factory1"):
        path_delay(case, "sensor-alarms@factory1", r_alarms=1e6)
    # 50 frames fit through the uplink but the ten-unit aggregate does not
    # fit through the backbone.
    with pytest.raises(UnstableSystemError, match="backbone"):
        path_delay(case, "sensor-alarms@factory1", r_alarms=50.0)


def test_unknown_flow(case):
    with pytest.raises(KeyError):
        path_delay(case, "nope")


def test_reliability_sweep_rows(case):
    lam = 1.0 / 60000.0
    rows = sweep_reliability(case, [lam])
    lam_out, control_fail, alarm_fail = rows[0]
    assert lam_out == lam
    # Control failure ~ lam/4 (overwrite survival) plus one link.
    assert control_fail == pytest.approx(lam / 4 + 1e-9, rel=1e-3)
    # Alarm batch failure is negligible at this rate; links dominate.
    assert alarm_fail == pytest.approx(1.0 - (1.0 - 1e-9) ** 3, rel=1e-3)


def test_reliability_sweep_monotone_in_lambda(case):
    rows = sweep_reliability(case, [1e-6, 1e-4, 1e-2, 0.5])
    control = [r[1] for r in rows]
    alarms = [r[2] for r in rows]
    assert control == sorted(control)
    assert alarms == sorted(alarms)


def test_latency_sweep_marks_unstable_rows(case):
    rows = sweep_latency(case, [1.0, 4.0, 1000.0])
    assert rows[0][1] is not None and rows[0][2] is not None
    assert rows[1][1] == pytest.approx(path_delay(case, "sensor-alarms@factory1").delay_bound_ms)
    assert rows[2][1] is None and rows[2][2] is None


def test_control_frames_override(case):
    # One 128 B control frame instead of four 32 B frames: a single alarm now
    # kills the whole control message, so failure rises ~4x.
    r1 = sweep_reliability(case, [4e-6])[0][1]
    r4 = sweep_reliability(case, [4e-6], control_frames=1)[0][1]
    assert r4 == pytest.approx(4e-6 + 1e-9, rel=1e-3)
    assert r1 == pytest.approx(1e-6 + 1e-9, rel=1e-3)
