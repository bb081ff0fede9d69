import math
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sadsac.data import FrequencyOfFrequencies
from sadsac.errors import DomainError, InsufficientDataError
from sadsac.richness import c_f, c_star, extrapolate_psi, trunc_poisson_test, unseen


def fof_from(*counts, **extra):
    table = {k: n for k, n in enumerate(counts, 1) if n}
    table.update({int(k[1:]): v for k, v in extra.items()})
    return FrequencyOfFrequencies(table)


def test_slope_estimates(data):
    assert c_star(data["accident"]) == pytest.approx(3 * 1317 * 42 / (2 * 239 ** 2) - 1, rel=1e-15)
    assert c_star(data["accident"]) == pytest.approx(0.4525, abs=1e-4)
    assert c_star(data["bird"]) == pytest.approx(0.14583, abs=1e-5)
    assert c_f(data["swine"]) == pytest.approx(3.2424, abs=1e-4)
    assert c_f(data["accident"]) == pytest.approx(0.4525, abs=1e-4)
    no_triples = fof_from(5, 3, 0, 2)
    assert c_star(no_triples) == -1 and c_f(no_triples) == 0


def test_slope_needs_doubletons():
    with pytest.raises(InsufficientDataError):
        c_star(fof_from(4, 0, 2))


def test_reference_richness(data):
    acc = unseen(data["accident"], "e_star")
    assert acc.unseen == pytest.approx(6628.2, abs=0.5)
    assert acc.total == pytest.approx(8249.2, abs=0.5)
    assert unseen(data["bird"], "e_star").total == pytest.approx(77.9, abs=0.1)
    assert unseen(data["bird"], "chao1_corrected").total == pytest.approx(77.0, abs=0.1)
    assert unseen(data["swine"], "e_star").total == math.inf
    assert unseen(data["tomato"], "e_star").total == math.inf


def test_unseen_branches():
    assert unseen(fof_from(3, 0, 1)).unseen == math.inf
    assert unseen(fof_from(0, 0, 0, 2)).unseen == 0
    assert unseen(fof_from(0, 4, 1)).unseen == 0
    # c_F = 1 exactly belongs to the infinite branch: 3 n1 n3 / (2 n2^2) = 2 with n1 / (2 n2) >= 1
    assert c_f(fof_from(4, 2, 4)) == 1.0
    assert unseen(fof_from(4, 2, 4)).unseen == math.inf


def test_unseen_instantaneous(data):
    start = time.perf_counter()
    for _ in range(100):
        unseen(data["accident"], "e_star")
    assert (time.perf_counter() - start) / 100 < 1e-3


@given(st.integers(0, 200), st.integers(1, 200), st.integers(0, 200))
def test_e_star_at_least_chao1(n1, n2, n3):
    fof = fof_from(n1, n2, n3)
    e = unseen(fof, "e_star")
    c = unseen(fof, "chao1")
    assert e.total >= c.total
    assert 0 <= e.c_hat_f <= n1 / (2 * n2)
    assert e.total == e.unseen + fof.n_plus
    if e.c_hat_f == 0:
        assert e.total == c.total


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 5))
def test_unseen_total_function(n1, n2, n3, n4):
    assert unseen(fof_from(n1, n2, n3, n4)).unseen >= 0


def test_trunc_poisson_reference(data):
    bird = trunc_poisson_test(data["bird"])
    assert bird.T == 66 and bird.var_T == 41976
    assert bird.p_value == pytest.approx(0.374, abs=0.002)
    assert trunc_poisson_test(data["accident"]).p_value == pytest.approx(0.040, abs=0.002)
    assert trunc_poisson_test(data["swine"]).p_value < 6e-6
    assert trunc_poisson_test(data["tomato"]).p_value < 6e-6


def test_trunc_poisson_degenerate():
    with pytest.raises(InsufficientDataError):
        trunc_poisson_test(fof_from(0, 0, 0, 3))


def test_trunc_poisson_mean_zero():
    """T has mean zero when rare counts are independent Poisson with zero-truncated-Poisson ratios."""
    rng = np.random.default_rng(11)
    lam, scale = 1.3, 60.0
    means = scale * np.array([lam, lam ** 2 / 2, lam ** 3 / 6])
    n = rng.poisson(means, size=(10_000, 3))
    t = 3 * n[:, 0] * n[:, 2] - 2 * n[:, 1] * (n[:, 1] - 1)
    assert abs(t.mean()) < 4 * t.std(ddof=1) / math.sqrt(len(t))


def test_extrapolation_limits(data):
    acc = data["accident"]
    assert extrapolate_psi(acc, math.inf) == pytest.approx(8249.2, abs=0.5)
    assert extrapolate_psi(acc, math.inf) == pytest.approx(unseen(acc).total, rel=1e-6)
    for name in ("bird", "accident", "swine", "tomato"):
        fof = data[name]
        chao = unseen(fof, "chao1").total
        assert extrapolate_psi(fof, math.inf, "zeroth_order") == pytest.approx(chao, rel=1e-12)
        assert extrapolate_psi(fof, 1e6 * fof.t0, "zeroth_order") == pytest.approx(chao, rel=1e-4)


def test_extrapolation_closed_form_vs_quadrature(data):
    bird = data["bird"]
    xi0 = bird.n(1) / (2 * bird.n(2))
    cf = c_f(bird)
    for t in (1.5, 4.0, 20.0):
        closed = extrapolate_psi(bird, t)
        numeric = extrapolate_psi(bird, t, lambda x: xi0 + cf * (x - 1))
        assert closed == pytest.approx(numeric, rel=1e-8)
    zeroth = extrapolate_psi(bird, 3.0, "zeroth_order")
    assert zeroth == pytest.approx(bird.n_plus + bird.n(1) * xi0 * -math.expm1(-2 / xi0), rel=1e-13)


def test_extrapolation_taylor(data):
    bird = data["bird"]
    eps = 1e-6
    value = extrapolate_psi(bird, 1 + eps)
    assert value - bird.n_plus == pytest.approx(eps * bird.n(1), rel=1e-5)
    assert extrapolate_psi(bird, 1.0) == bird.n_plus


def test_extrapolation_errors(data):
    with pytest.raises(DomainError):
        extrapolate_psi(data["bird"], 0.5)
    with pytest.raises(DomainError):
        extrapolate_psi(data["bird"], 3.0, lambda x: 2.0 - x)
