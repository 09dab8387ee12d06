import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial.distance import jensenshannon
from scipy.stats import entropy

from zsbilling import BillingPeriodConfig, ConsumptionSeries, TariffSchedule, ValidationError
from zsbilling.datasets import desk_dataset
from zsbilling.privacy import (
    DiscretePmf,
    histogram,
    js_divergence,
    kl_divergence,
    noise_scale_sweep,
    perturb_series,
    reference_edges,
    shared_edges,
    write_sweep_csv,
)


def pmf(*masses):
    return DiscretePmf.from_masses(masses)


def test_unit_values():
    assert js_divergence(pmf(0.2, 0.3, 0.5), pmf(0.2, 0.3, 0.5)) == 0.0
    assert js_divergence(pmf(1, 0), pmf(0, 1)) == pytest.approx(1.0, abs=1e-15)
    assert js_divergence(pmf(1, 0), pmf(0.5, 0.5)) == pytest.approx(0.311278, abs=1e-6)


def test_kl_asymmetric_and_infinite():
    q, p = pmf(0.9, 0.1), pmf(0.5, 0.5)
    assert kl_divergence(q, p) == pytest.approx(entropy([0.9, 0.1], [0.5, 0.5], base=2))
    assert kl_divergence(q, p) != pytest.approx(kl_divergence(p, q))
    assert kl_divergence(pmf(0.5, 0.5), pmf(1, 0)) == math.inf
    assert kl_divergence(pmf(1, 0), pmf(0.5, 0.5)) == pytest.approx(1.0)


def test_random_pairs_bounded_symmetric_and_match_scipy():
    rng = np.random.default_rng(3)
    for _ in range(10_000):
        k = int(rng.integers(1, 12))
        a = rng.random(k) * (rng.random(k) > 0.3)
        b = rng.random(k) * (rng.random(k) > 0.3)
        if a.sum() == 0 or b.sum() == 0:
            continue
        q, p = pmf(*(a / a.sum())), pmf(*(b / b.sum()))
        js = js_divergence(q, p)
        assert 0.0 <= js <= 1.0
        assert abs(js - js_divergence(p, q)) <= 1e-12
    # independent oracle on a subset
    for _ in range(200):
        a, b = rng.random(8), rng.random(8)
        q, p = pmf(*(a / a.sum())), pmf(*(b / b.sum()))
        assert js_divergence(q, p) == pytest.approx(jensenshannon(q.masses, p.masses, base=2) ** 2, abs=1e-12)


@given(st.lists(st.floats(0, 1), min_size=2, max_size=10).filter(lambda xs: sum(xs) > 1e-6))
def test_js_of_self_is_zero(xs):
    total = sum(xs)
    masses = np.array(xs) / total
    masses[-1] = 1.0 - masses[:-1].sum()
    if masses[-1] < 0:
        masses[-1] = 0.0
        masses /= masses.sum()
    p = DiscretePmf.from_masses(masses)
    assert js_divergence(p, p) == 0.0


def test_pmf_validation():
    with pytest.raises(ValidationError):
        DiscretePmf.from_masses([0.5, 0.6])
    with pytest.raises(ValidationError):
        DiscretePmf.from_masses([0.5, 0.5], edges=[0, 1])
    with pytest.raises(ValidationError):
        DiscretePmf.from_masses([0.5, 0.5], edges=[0, 2, 1])
    with pytest.raises(ValidationError, match="identical"):
        js_divergence(pmf(0.5, 0.5), DiscretePmf.from_masses([0.5, 0.5], edges=[0, 1, 3]))


def test_histogram_and_edges():
    edges = shared_edges([0, 1, 2], [3, 4], bins=4)
    assert edges[0] == 0 and edges[-1] == 4 and len(edges) == 5
    h = histogram([0, 1, 2, 4], edges)
    assert h.masses.sum() == pytest.approx(1.0)
    assert h.masses[-1] == 0.25  # top edge is inclusive
    with pytest.raises(ValidationError):
        histogram([5], edges)
    with pytest.raises(ValidationError):
        histogram([], edges)
    flat = shared_edges([2, 2], bins=2)
    assert list(flat) == [1.5, 2.0, 2.5]


def test_reference_edges_cover_both():
    orig = [0.0, 1.0, 2.0]
    noisy = [-5.0, 1.0, 30.0]
    edges = reference_edges(orig, noisy, bins=4)
    assert edges[0] == -5.0 and edges[-1] == 30.0 and len(edges) == 7
    assert histogram(orig, edges).masses[-1] == 0  # original max stays in the inner range
    assert len(reference_edges(orig, orig, bins=4)) == 5


def test_perturbed_series_bill_unchanged():
    cfg = BillingPeriodConfig(15, 1)
    series = ConsumptionSeries(1, [0.2] * 96)
    tariffs = TariffSchedule(1, [0.05 + 0.001 * i for i in range(96)])
    noisy = perturb_series(series, tariffs, sigma=0.5, seed=1, config=cfg)
    assert noisy != list(series.readings)
    bill = sum(v * p for v, p in zip(noisy, tariffs.prices))
    assert bill == pytest.approx(sum(0.2 * p for p in tariffs.prices), rel=1e-9)


def test_sweep_tiny_scale_near_zero_and_monotone():
    data, tariffs = desk_dataset()
    rows = noise_scale_sweep(list(data.series.values()), tariffs[1], scales=[1e-9, 1.0, 9.0], config=data.config)
    assert rows[0][1] < 0.05
    assert rows[0][1] < rows[1][1] < rows[2][1]


def test_sweep_rejects_bad_arguments():
    data, tariffs = desk_dataset()
    series = list(data.series.values())
    with pytest.raises(ValidationError):
        noise_scale_sweep(series, tariffs[1], scales=[0.0], config=data.config)
    with pytest.raises(ValidationError):
        noise_scale_sweep(series, tariffs[1], bins=1, config=data.config)
    with pytest.raises(ValidationError, match="binning"):
        noise_scale_sweep(series, tariffs[1], binning="other", config=data.config)
    with pytest.raises(ValidationError):
        noise_scale_sweep([], tariffs[1], config=data.config)


def test_sweep_csv(tmp_path):
    path = tmp_path / "s.csv"
    write_sweep_csv(path, [(1 / 9, 0.123456), (1.0, 0.5)])
    assert path.read_text().splitlines() == ["scale,js_divergence", "0.111111,0.12346", "1,0.50000"]
