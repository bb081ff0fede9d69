import math

import numpy as np
import pytest
from scipy import stats

from sadsac.data import FrequencyOfFrequencies
from sadsac.errors import ValidationError
from sadsac.models import Ldr1Params, Ldr2Params, PlnParams, Rdr1Params
from sadsac.simulate import (
    AtomicIntensity,
    sad_table,
    sim_fof,
    sim_mppp_window,
    sim_rho_from_fof,
    zero_truncated_poisson,
)

BIRD = Ldr1Params(14.696, 0.044, 0.772)


def _pooled_chi2(fofs, p, n_total, kcut):
    """Chi-square of pooled frequency counts against ``n_total * p`` with a tail cell at ``kcut``."""
    obs = np.zeros(kcut + 1)
    for f in fofs:
        for k, n in zip(f.ks, f.nk):
            obs[min(k, kcut + 1) - 1] += n
    exp = np.append(p[:kcut], 1 - p[:kcut].sum()) * n_total
    return stats.chisquare(obs, exp)


def test_seed_required():
    with pytest.raises(ValidationError):
        sim_fof(BIRD, 1.0, None)


def test_determinism():
    assert sim_fof(BIRD, 1.0, 5) == sim_fof(BIRD, 1.0, 5)
    a, b = sim_mppp_window(BIRD, 1.0, 5), sim_mppp_window(BIRD, 1.0, 5)
    assert a.fof() == b.fof()
    assert all(np.array_equal(x, y) for x, y in zip(a.times, b.times))


def test_zero_truncated_poisson_mean():
    rng = np.random.default_rng(0)
    for mu in (1e-6, 0.3, 4.0, 80.0):
        draws = zero_truncated_poisson(np.full(20_000, mu), rng)
        assert draws.min() >= 1
        mean = mu / -math.expm1(-mu)
        sd = math.sqrt(mean * (1 + mu - mean))
        assert abs(draws.mean() - mean) < 5 * sd / math.sqrt(draws.size)


def test_atomic_intensity_count():
    spec = AtomicIntensity((2.0,), (30.0,))
    n = np.array([sim_mppp_window(spec, 1.5, s).n_species for s in range(2000)])
    mean = 30 * -math.expm1(-3.0)
    assert abs(n.mean() - mean) < 4 * math.sqrt(mean / 2000)
    assert n.var(ddof=1) / n.mean() == pytest.approx(1.0, abs=0.1)


def test_zero_rate_only():
    spec = AtomicIntensity((), (), zero_rate=40.0)
    reals = [sim_mppp_window(spec, 2.0, s) for s in range(1000)]
    n = np.array([r.n_species for r in reals])
    assert abs(n.mean() - 80) < 4 * math.sqrt(80 / 1000)
    times = np.concatenate([r.first_times() for r in reals])
    assert all(len(t) == 1 for r in reals for t in r.times)
    assert stats.kstest(times / 2.0, "uniform").pvalue > 0.01


def test_window_invariants():
    r = sim_mppp_window(Ldr2Params(30.0, BIRD), 1.0, 3)
    assert all(len(t) >= 1 and np.all(np.diff(t) >= 0) and 0 <= t[0] and t[-1] <= 1 for t in r.times)
    assert all(len(t) == 1 for t, lam in zip(r.times, r.rates) if lam == 0)


def test_logseries_species_mean():
    m = Ldr1Params(200.0, 1.0, 1.0)
    n = np.array([sim_mppp_window(m, 1.0, s).n_species for s in range(2000)])
    assert abs(n.mean() - 400 * math.log(2)) < 4 * math.sqrt(400 * math.log(2) / 2000)


def test_singleton_only_model():
    f = sim_fof(Ldr1Params(50.0, 0.0, math.inf), 1.0, 1)
    assert f.max_k == 1 and f.n_plus > 0


def test_sim_fof_distribution():
    p = sad_table(BIRD, 1.0)
    fofs = [sim_fof(BIRD, 1.0, s) for s in range(1000)]
    total = sum(f.n_plus for f in fofs)
    assert _pooled_chi2(fofs, p, total, 40).pvalue > 0.01


def test_counts_are_poisson():
    m = Ldr1Params(40.0, 0.5, 0.6)
    fofs = [sim_fof(m, 1.0, s) for s in range(5000)]
    for k in (1, 2):
        nk = np.array([f.n(k) for f in fofs])
        assert abs(nk.mean() - m.expected_counts([k], 1.0)[0]) < 4 * math.sqrt(m.expected_counts([k], 1.0)[0] / 5000)
        assert 0.9 <= nk.var(ddof=1) / nk.mean() <= 1.1


@pytest.mark.parametrize("model", [BIRD, Rdr1Params(60.0, 0.2, 3.0, 0.4, 0.7), PlnParams(1.0, 1.2, 60.0),
                                   Ldr1Params(30.0, 0.3, 1.6)])
def test_two_routes_agree(model):
    p = sad_table(model, 1.0)
    direct = [sim_fof(model, 1.0, s) for s in range(2000)]
    window = [sim_mppp_window(model, 1.0, 10_000 + s).fof() for s in range(2000)]
    kcut = 12
    obs = np.zeros((2, kcut + 1))
    for row, fofs in enumerate((direct, window)):
        for f in fofs:
            for k, n in zip(f.ks, f.nk):
                obs[row, min(k, kcut + 1) - 1] += n
    assert stats.chi2_contingency(obs).pvalue > 0.01
    # window route also matches the model table
    assert _pooled_chi2(window, p, obs[1].sum(), kcut).pvalue > 0.01


def test_seed_decorrelation():
    n = np.array([sim_fof(BIRD, 1.0, s).n_plus for s in range(1000)], dtype=float)
    assert abs(np.corrcoef(n[:-1], n[1:])[0, 1]) < 0.1


def test_rho_thinning_edges(data):
    bird = data["bird"]
    one = sim_rho_from_fof(bird, 1, 0)
    assert one.low_counts == () or len(one.low_counts) == 0
    assert len(one.times) == bird.n_plus
    big = sim_rho_from_fof(bird, 100, 0)
    assert len(big.times) == 0 and list(big.low_counts) == list(bird.dense(99))
    with pytest.raises(ValidationError):
        sim_rho_from_fof(bird, 0, 0)


def test_rho_beta_mean():
    fof = FrequencyOfFrequencies({2: 10_000})
    t = sim_rho_from_fof(fof, 2, 4).times
    se = math.sqrt(1 / 18 / t.size)
    assert abs(t.mean() - 2 / 3) < 4 * se


def test_rho_times_are_erlang():
    lam, t0, rho = 3.0, 1.0, 2
    spec = AtomicIntensity((lam,), (4000.0,))
    times = sim_mppp_window(spec, t0, 8).rho_data(rho).times
    cdf_t0 = stats.gamma.cdf(t0, rho, scale=1 / lam)
    result = stats.kstest(times, lambda x: stats.gamma.cdf(x, rho, scale=1 / lam) / cdf_t0)
    assert times.size > 1000 and result.pvalue > 0.01


def test_window_appearance_cap(monkeypatch):
    from sadsac import simulate
    from sadsac.errors import NumericError

    monkeypatch.setattr(simulate, "MAX_APPEARANCES", 10_000)
    with pytest.raises(NumericError):
        sim_mppp_window(Ldr1Params(1000.0, 0.0, 2.0), 1.0, 0)
