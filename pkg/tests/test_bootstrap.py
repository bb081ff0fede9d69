import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sadsac.bootstrap import (
    BootstrapConfig,
    bootstrap_ci,
    bootstrap_hill,
    bootstrap_richness,
    model_fof_sampler,
    rare_counts_plan,
    rare_counts_sampler,
    smallest_interval,
)
from sadsac.data import FrequencyOfFrequencies
from sadsac.errors import InsufficientDataError, ValidationError
from sadsac.fit import mle
from sadsac.hill import hill
from sadsac.models import Ldr1Params
from sadsac.nonparam import expected_fof_interp
from sadsac.simulate import sim_fof


def test_config_validation():
    BootstrapConfig(19, 0.1)
    BootstrapConfig(399, 0.05, 7)
    for bad in (dict(B=18, alpha=0.1), dict(B=100, alpha=0.05), dict(B=19, alpha=1.5)):
        with pytest.raises(ValidationError):
            BootstrapConfig(**bad)


def test_interval_examples():
    assert smallest_interval([5.0] * 39, 0.05) == (5.0, 5.0)
    assert smallest_interval([math.inf] * 19, 0.05) == (math.inf, math.inf)
    # alpha = 0.1: [0, 18] and [1, 19] tie on width 18, the smaller start index wins
    assert smallest_interval(np.arange(1.0, 20.0), 0.1) == (0.0, 18.0)
    # alpha = 0.05: j = 0 pairs the zero sentinel with theta_(19), j = 1 pairs theta_(1) with inf
    assert smallest_interval(np.arange(1.0, 20.0), 0.05) == (0.0, 19.0)


def test_interval_picks_narrowest():
    reps = np.concatenate([np.full(38, 100.0), [150.0]])
    assert smallest_interval(reps, 0.05) == (100.0, 150.0)
    # the zero sentinel wins when the sample starts near zero
    reps = np.concatenate([[0.1, 0.2], np.full(36, 10.0), [50.0]])
    assert smallest_interval(reps, 0.05) == (0.0, 10.0)


@given(st.lists(st.one_of(st.floats(0, 1e6), st.just(math.inf)), min_size=39, max_size=39))
def test_interval_ordered_and_from_sample(values):
    lo, hi = smallest_interval(values, 0.05)
    assert lo <= hi
    allowed = set(values) | {0.0, math.inf}
    assert lo in allowed and hi in allowed


def test_failed_replicates_become_infinite():
    calls = iter(range(19))

    def estimator(_):
        i = next(calls)
        if i % 2:
            raise InsufficientDataError("degenerate")
        return float(i)

    out = bootstrap_ci(lambda rng: None, estimator, BootstrapConfig(19, 0.1, 0))
    assert out.upper == math.inf


def test_determinism(data):
    cfg = BootstrapConfig(39, 0.05, 123)
    a = bootstrap_richness(data["bird"], cfg)
    b = bootstrap_richness(data["bird"], cfg)
    assert a == b
    fit = mle(data["bird"], "ldr1")
    h1 = bootstrap_hill(fit, [1, 2], cfg)
    h2 = bootstrap_hill(fit, [1, 2], cfg)
    assert h1 == h2


def test_threads_do_not_change_results(data, monkeypatch):
    cfg = BootstrapConfig(39, 0.05, 9)
    fit = mle(data["bird"], "ldr1")
    serial = bootstrap_hill(fit, [2], cfg)
    monkeypatch.setenv("SADSAC_THREADS", "4")
    assert bootstrap_hill(fit, [2], cfg) == serial


def test_swine_richness_interval(data):
    out = bootstrap_richness(data["swine"], BootstrapConfig(399, 0.05, 2024))
    assert out.point == out.lower == out.upper == math.inf


def test_bird_richness_interval(data):
    out = bootstrap_richness(data["bird"], BootstrapConfig(2999, 0.05, 1))
    assert out.point == pytest.approx(77.9, abs=0.1)
    assert out.lower <= out.point <= out.upper


def test_rare_counts_plan(data):
    plan = rare_counts_plan(data["bird"])
    assert plan.means == (11, 12, 10) and not plan.shifted
    fof = FrequencyOfFrequencies({2: 2, 3: 1, 5: 4})
    plan = rare_counts_plan(fof)
    assert plan.shifted and min(plan.means) > 0
    t = fof.t0 - fof.t0 / fof.s_total
    assert plan.t == pytest.approx(t)
    assert plan.means[0] == pytest.approx(expected_fof_interp(fof, 1, t))
    with pytest.raises(InsufficientDataError):
        rare_counts_plan(FrequencyOfFrequencies({}))


def test_rare_counts_sampler_mean(data):
    draws = np.array([rare_counts_sampler(data["bird"], s) for s in range(4000)])
    se = np.sqrt(np.array([11, 12, 10]) / len(draws))
    assert np.all(np.abs(draws.mean(axis=0) - [11, 12, 10]) < 4 * se)


def test_model_sampler(data):
    fit = mle(data["bird"], "ldr1")
    fofs = [model_fof_sampler(fit, s) for s in range(2000)]
    n = np.array([f.n_plus for f in fofs])
    assert abs(n.mean() - 72) < 4 * math.sqrt(72 / 2000)
    singles = sum(f.n(1) for f in fofs)
    p1 = fit.params.pk([1], 1.0)[0]
    se = math.sqrt(p1 * (1 - p1) / n.sum())
    assert abs(singles / n.sum() - p1) < 3 * se
    empty = Ldr1Params(1e-300, 1.0, 0.5)
    assert model_fof_sampler(empty, 0).n_plus == 0


@pytest.mark.slow
def test_hill_interval_coverage():
    truth_model = Ldr1Params(200.0, 1.0, 0.5)
    truth = hill(truth_model, 2)
    cfg = BootstrapConfig(399, 0.05, 0)
    covered = 0
    for i in range(200):
        fit = mle(sim_fof(truth_model, 1.0, 10_000 + i), "ldr1")
        ci = bootstrap_hill(fit, [2], BootstrapConfig(399, 0.05, i))[2.0]
        covered += ci.lower <= truth <= ci.upper
    assert cfg.B == 399
    assert covered / 200 >= 0.88
