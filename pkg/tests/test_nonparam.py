import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sadsac.data import FrequencyOfFrequencies
from sadsac.errors import DomainError, SingularPointError
from sadsac.models import Ldr1Params
from sadsac.nonparam import (
    d1d2_band,
    d2d3_band,
    default_grid,
    diagnostic_curve,
    expected_fof_interp,
    good_toulmin,
    hat_psi_cov,
    hat_psi_deriv,
    hat_xi,
    rarefaction,
)
from sadsac.simulate import sim_fof

fofs = st.dictionaries(st.integers(1, 40), st.integers(1, 200), min_size=1, max_size=10).map(
    FrequencyOfFrequencies
)


def brute_deriv(fof, j, t):
    """Arbitrary-precision evaluation of the unbiased derivative estimator."""
    mpmath.mp.dps = 40
    u = 1 - mpmath.mpf(t) / fof.t0
    s = mpmath.mpf(0)
    for k, n in fof.counts.items():
        if k >= j:
            s += mpmath.factorial(k) / mpmath.factorial(k - j) * n * u ** (k - j)
    return float((-1) ** (j + 1) * s / mpmath.mpf(fof.t0) ** j)


def test_deriv_at_t0(data):
    bird = data["bird"]
    assert hat_psi_deriv(bird, 1, 1.0) == 11
    assert hat_psi_deriv(bird, 2, 1.0) == -24


@pytest.mark.parametrize("name,j,t", [("swine", 1, 0.5), ("swine", 3, 0.3), ("tomato", 2, 0.7)])
def test_deriv_matches_brute_force(data, name, j, t):
    fof = data[name]
    assert hat_psi_deriv(fof, j, t) == pytest.approx(brute_deriv(fof, j, t), rel=1e-12)


def test_deriv_domain(data):
    with pytest.raises(DomainError):
        hat_psi_deriv(data["bird"], 1, 0.0)
    with pytest.raises(DomainError):
        hat_psi_deriv(data["bird"], 1, 1.2)


def test_xi_at_t0(data):
    assert hat_xi(data["accident"], 1.0) == pytest.approx(1317 / (2 * 239), rel=1e-14)
    assert hat_xi(data["bird"], 1.0) == pytest.approx(11 / 24, rel=1e-14)
    with pytest.raises(SingularPointError):
        hat_xi(FrequencyOfFrequencies({1: 5}), 0.5)
    with pytest.raises(SingularPointError):
        d1d2_band(FrequencyOfFrequencies({1: 5, 3: 2}), 1.0)


def _brute_band(fof, j, t, z):
    d = [brute_deriv(fof, i, t) for i in (j, j + 1)]
    mpmath.mp.dps = 40
    u = 1 - mpmath.mpf(t) / fof.t0

    def cov(a, b):
        s = mpmath.mpf(0)
        for k, n in fof.counts.items():
            if k >= max(a, b):
                s += (mpmath.factorial(k) / mpmath.factorial(k - a)) * (
                    mpmath.factorial(k) / mpmath.factorial(k - b)) * n * u ** (2 * k - a - b)
        return float((-1) ** (a + b) * s / mpmath.mpf(fof.t0) ** (a + b))

    num, den = d
    var = cov(j, j) / den**2 + num**2 * cov(j + 1, j + 1) / den**4 - 2 * num * cov(j, j + 1) / den**3
    value = -num / den
    return value, value - z * math.sqrt(var), value + z * math.sqrt(var)


@pytest.mark.parametrize("name,j,t", [("bird", 1, 1.0), ("bird", 1, 0.6), ("swine", 2, 0.8), ("tomato", 2, 1.0)])
def test_bands_match_brute_force(data, name, j, t):
    band = (d1d2_band if j == 1 else d2d3_band)(data[name], t, 1.96)
    np.testing.assert_allclose(band, _brute_band(data[name], j, t, 1.96), rtol=1e-9)
    assert band.lower < band.value < band.upper


def test_rarefaction_and_gt(data):
    bird, acc = data["bird"], data["accident"]
    assert rarefaction(bird, 0.0) == 0
    assert rarefaction(bird, 1.0) == bird.n_plus
    assert good_toulmin(bird, 1.0) == bird.n_plus
    # GT is the rarefaction polynomial evaluated with 1 - t/t0 negative
    brute = sum(n * (1 - (1 - 1.5) ** k) for k, n in acc.counts.items())
    assert good_toulmin(acc, 1.5) == pytest.approx(brute, rel=1e-12)
    with pytest.raises(DomainError):
        good_toulmin(bird, 2.0)
    with pytest.raises(DomainError):
        rarefaction(bird, 1.5)


def test_rarefaction_monte_carlo(data):
    bird = data["bird"]
    rng = np.random.default_rng(5)
    m = np.repeat(bird.ks, bird.nk)
    reps = 100_000
    seen = (rng.binomial(m[None, :], 0.5, size=(reps, m.size)) > 0).sum(axis=1)
    se = seen.std() / math.sqrt(reps)
    assert abs(seen.mean() - rarefaction(bird, 0.5)) < 3 * se


@given(fofs, st.floats(0.05, 1.0))
def test_interp_identity(fof, t):
    for j in (1, 2, 3):
        lhs = expected_fof_interp(fof, j, t)
        rhs = (-1) ** (j + 1) * t**j / math.factorial(j) * hat_psi_deriv(fof, j, t)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


def test_interp_endpoints(data):
    sw = data["swine"]
    assert expected_fof_interp(sw, 2, 1.0) == pytest.approx(605)
    assert expected_fof_interp(sw, 1, 0.0) == 0


@given(fofs)
def test_sign_at_t0(fof):
    for j in range(1, 8):
        if fof.n(j) > 0:
            assert (-1) ** (j + 1) * hat_psi_deriv(fof, j, fof.t0) >= 0


@given(fofs)
def test_gt_rarefaction_continuity(fof):
    eps = 1e-9
    assert good_toulmin(fof, fof.t0) == rarefaction(fof, fof.t0) == fof.n_plus
    assert abs(good_toulmin(fof, fof.t0 + eps) - rarefaction(fof, fof.t0 - eps)) < 1e-4 * max(1, fof.s_total)


def test_covariance_is_variance_on_diagonal(data):
    v = hat_psi_cov(data["bird"], 1, 1, 0.5)
    assert v > 0


def test_default_grid():
    g = default_grid(2.0)
    assert g.size == 200 and g[0] > 0.02 and g[-1] == 2.0 and np.all(np.diff(g) > 0)


def test_logseries_check_linear():
    fof = sim_fof(Ldr1Params(200.0, 1.0, 1.0), 1.0, 11)
    grid = np.linspace(0.05, 1.0, 100)
    curve = diagnostic_curve(fof, "logseries", grid)
    assert curve.slope()[1] > 0.99


def test_poisson_check_slope():
    # noise-free version: a FoF equal to its expectation (scaled up) gives the exact identity
    model = Ldr1Params(20000.0, 0.5, 0.0)
    ks = np.arange(1, 60)
    expected = model.expected_counts(ks, 1.0)
    fof = FrequencyOfFrequencies({int(k): int(round(e)) for k, e in zip(ks, expected)})
    curve = diagnostic_curve(fof, "poisson", np.linspace(0.1, 1.0, 50))
    assert curve.slope()[0] == pytest.approx(-1 / 0.5, rel=0.02)


def test_powerlaw_check_slope():
    slopes = []
    for seed in range(10):
        fof = sim_fof(Ldr1Params(200.0, 0.0, 3.0), 1.0, seed)
        curve = diagnostic_curve(fof, "powerlaw", np.linspace(0.05, 1.0, 100))
        slopes.append(curve.slope()[0])
    assert np.mean(slopes) == pytest.approx(-1 / 3, abs=0.05)


def test_curve_invariants(data):
    for name in ("d1d2", "d2d3", "poisson", "geometric", "logseries", "powerlaw", "loglog"):
        c = diagnostic_curve(data["tomato"], name)
        assert np.all(np.diff(c.t) > 0)
        ok = np.isfinite(c.lower)
        assert np.all(c.lower[ok] <= c.value[ok]) and np.all(c.value[ok] <= c.upper[ok])
    d = diagnostic_curve(data["bird"], "d1d2")
    assert d.reference_slope == 1.0
    assert d.to_csv().splitlines()[0] == "t,value,lower,upper"
