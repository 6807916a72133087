"""Cyclic slicing schemes: analytic reliabilities against enumeration."""

import math
import random

import pytest

from sliceqos.cyclic import (
    CycleApp,
    CycleSpec,
    Deterministic,
    Fixed,
    Overwrite,
    Pmf,
    Poisson,
    SharedPool,
    alarm_egress_bound,
    byte_pmf,
    convolve_counts,
    expected_min_count,
    fixed_reliability,
    overwrite_delivered_fraction,
    overwrite_deterministic_reliability,
    overwrite_stochastic_reliability,
    poisson_pmf_truncated,
    shared_pool_reliability,
    utilization,
)


def test_poisson_truncation_mass_and_values():
    for mean in (1e-5, 0.1, 1.0, 7.0, 40.0):
        pmf = poisson_pmf_truncated(mean)
        assert abs(math.fsum(pmf) - 1.0) < 1e-14
        for k in range(min(len(pmf), 5)):
            want = math.exp(-mean) * mean**k / math.factorial(k)
            assert pmf[k] == pytest.approx(want, rel=1e-12)
        # Truncated tail is provably below the absolute threshold.
        n = len(pmf)
        assert n - mean + n * (math.log(mean) - math.log(n)) < math.log(1e-15)


def test_poisson_zero_mean():
    assert poisson_pmf_truncated(0.0) == [1.0]


def test_pmf_validation():
    with pytest.raises(ValueError):
        Pmf((0.5, 0.5 + 1e-9), 32.0)  # sum off by more than 1e-12
    with pytest.raises(ValueError):
        Pmf((1.1, -0.1), 32.0)
    with pytest.raises(ValueError):
        Pmf((1.0,), 0.0)


def test_arrival_model_pmfs():
    assert Deterministic(3, 16.0).frame_pmf() == [0.0, 0.0, 0.0, 1.0]
    assert Pmf((0.25, 0.75), 8.0).frame_pmf() == [0.25, 0.75]
    assert byte_pmf(Pmf((0.25, 0.75), 8.0)) == {0.0: 0.25, 8.0: 0.75}


def test_convolve_counts():
    assert convolve_counts([0.5, 0.5], [0.5, 0.5]) == [0.25, 0.5, 0.25]


def test_expected_min_count():
    pmf = [0.25, 0.25, 0.25, 0.25]  # uniform on 0..3
    assert expected_min_count(pmf, 2) == pytest.approx((0 + 1 + 2 + 2) / 4)


def test_fixed_reliability_matches_enumeration():
    model = Pmf((0.5, 0.25, 0.125, 0.125), 10.0)
    # 25 bytes admit counts 0..2.
    assert fixed_reliability(model, 25.0) == 0.5 + 0.25 + 0.125
    assert fixed_reliability(model, 0.0) == 0.5
    assert fixed_reliability(model, 100.0) == 1.0


def test_shared_pool_matches_enumeration_exactly():
    rng = random.Random(5)
    for _ in range(20):
        models = []
        for _ in range(rng.randint(2, 4)):
            k = rng.randint(1, 4)
            # Dyadic probabilities keep every enumeration term exact in
            # binary floating point, so equality can be checked exactly.
            raw = [rng.randint(0, 4) for _ in range(k)] + [1]
            scale = 2 ** math.ceil(math.log2(sum(raw)))
            raw[-1] += scale - sum(raw)
            models.append(Pmf(tuple(r / scale for r in raw), float(rng.randint(8, 32))))
        pool = float(rng.randint(16, 128))
        brute = 0.0
        combos = [(1.0, 0.0)]
        for m in models:
            combos = [
                (p * q, b + i * m.frame_size)
                for p, b in combos
                for i, q in enumerate(m.probs)
            ]
        brute = math.fsum(p for p, b in combos if b <= pool + 1e-9)
        assert shared_pool_reliability(models, pool) == brute


def test_overwrite_deterministic_reliability():
    det = Deterministic(4, 32.0)
    model = Poisson(0.1, 32.0)
    pmf = model.frame_pmf()
    want = 1.0 - math.fsum(min(k, 4) * p for k, p in enumerate(pmf)) / 4
    assert overwrite_deterministic_reliability(det, [model]) == pytest.approx(
        want, rel=1e-12
    )
    # No sporadic traffic: nothing is overwritten.
    assert overwrite_deterministic_reliability(det, [Poisson(0.0, 32.0)]) == 1.0


def test_overwrite_stochastic_reliability():
    model = Pmf((0.5, 0.25, 0.125, 0.0625, 0.0625), 32.0)
    # Batch fails only when more than 2 frames arrive.
    assert overwrite_stochastic_reliability(2, [model]) == 0.5 + 0.25 + 0.125
    assert overwrite_stochastic_reliability(4, [model]) == 1.0


def test_overwrite_delivered_fraction():
    model = Pmf((0.0, 0.5, 0.0, 0.5), 32.0)  # 1 or 3 frames, mean 2
    # Cap 2: delivered mean (1 + 2)/2 = 1.5 of 2 arriving.
    assert overwrite_delivered_fraction(2, [model]) == pytest.approx(0.75)
    assert overwrite_delivered_fraction(2, [Poisson(0.0, 32.0)]) == 1.0


def test_overwrite_aggregates_multiple_writers():
    a = Pmf((0.5, 0.5), 32.0)
    b = Pmf((0.5, 0.5), 32.0)
    # Aggregate count is Binomial(2, 0.5); batch of >1 fails for det_frames=1.
    assert overwrite_stochastic_reliability(1, [a, b]) == pytest.approx(0.75)


def test_utilization():
    assert utilization(Overwrite("x"), [Poisson(0.5, 32.0)]) == 1.0
    lam = 1.0 / 60000.0
    u = utilization(Fixed(32.0), [Poisson(lam, 32.0)])
    assert u == pytest.approx(1.0 - math.exp(-lam), rel=1e-12)
    assert utilization(Fixed(0.0), [Poisson(lam, 32.0)]) == 1.0
    # Shared pool of 20 with two always-on 10-byte apps is fully used.
    pool = SharedPool(20.0)
    assert utilization(pool, [Deterministic(1, 10.0), Deterministic(1, 10.0)]) == 1.0


def test_alarm_egress_bound():
    tb = alarm_egress_bound(4, 32.0, 1.0)
    assert tb.rate == 128.0 and tb.burst == 128.0
    tb = alarm_egress_bound(0.5, 32.0, 2.0)
    assert tb.rate == 8.0 and tb.burst == 16.0
    with pytest.raises(ValueError):
        alarm_egress_bound(-1, 32.0, 1.0)


def test_cycle_spec_overcommit():
    apps = (
        CycleApp("a", Deterministic(4, 32.0), None),
        CycleApp("b", Poisson(0.1, 64.0), Fixed(96.0)),
    )
    CycleSpec(1.0, 224.0, apps)  # exactly full is fine
    with pytest.raises(ValueError):
        CycleSpec(1.0, 223.0, apps)


def test_cycle_spec_shared_pool_counted_once():
    pool = SharedPool(100.0)
    apps = (
        CycleApp("a", Poisson(0.1, 10.0), pool),
        CycleApp("b", Poisson(0.1, 10.0), pool),
    )
    CycleSpec(1.0, 100.0, apps)  # one pool, not two

    with pytest.raises(ValueError):
        CycleSpec(1.0, 100.0, apps + (CycleApp("c", Poisson(0.1, 1.0), Fixed(1.0)),))


def test_plain_reservation_requires_deterministic():
    with pytest.raises(ValueError):
        CycleSpec(1.0, 100.0, (CycleApp("a", Poisson(0.1, 10.0), None),))
