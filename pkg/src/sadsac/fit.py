"""Likelihoods, maximum-likelihood fitting and goodness of fit.

The FoF log-likelihood, with the constants ``-sum log n_k!`` and
``sum n_k (k log t0 - log k!)`` dropped, is

.. math::

    \\ell(\\psi) = -\\psi(t_0) + \\sum_k n_k \\log|\\psi^{(k)}(t_0)| .

Every family has a scale parameter that multiplies ``psi``; it is profiled
out analytically (``psi(t0) = n_+`` at the optimum), leaving a search over
shape parameters only. Shapes are mapped to unconstrained coordinates
(logs, and ``b2 = b1 + exp(gap)`` for RDR1) and searched with Nelder-Mead
from several starting points.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln
from scipy.stats import chi2

from .data import FrequencyOfFrequencies, RhoAppearanceData, to_jsonable
from .errors import InsufficientDataError, ValidationError
from .models import FAMILIES, Ldr1Params, Ldr2Params, PlnParams, Rdr1Params
from .nonparam import default_grid, hat_xi

N_STARTS = 8
XATOL = 1e-9
FATOL = 1e-10


@dataclass
class FitResult:
    """Outcome of :func:`mle` or :func:`mle_rho`.

    ``loglik`` uses the constant-free convention of :func:`loglik_fof` and
    ``aic = 2 * n_params - 2 * loglik``.
    """

    params: object
    loglik: float
    aic: float
    converged: bool
    n_evals: int
    start_points: int
    family: str = None
    t0: float = 1.0
    history: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return to_jsonable({
            "family": self.family,
            "params": self.params.to_dict(),
            "loglik": self.loglik,
            "aic": self.aic,
            "converged": self.converged,
            "n_evals": self.n_evals,
            "start_points": self.start_points,
            "t0": self.t0,
        })


# ---------------------------------------------------------------------------
# log-likelihoods


def poisson_constant(fof):
    """``sum_k n_k (k log t0 - log k!)``: add to :func:`loglik_fof` for ``sum n_k log E(N_k)``."""
    ks, nk = fof.ks, fof.nk
    return float((nk * (ks * math.log(fof.t0) - gammaln(ks + 1.0))).sum())


def loglik_fof(model, fof, poisson_form=False):
    """FoF log-likelihood ``-psi(t0) + sum_k n_k log|psi^(k)(t0)|``.

    Parameters
    ----------
    model : EsacModel
    fof : FrequencyOfFrequencies
    poisson_form : bool, optional
        If True, return ``-psi(t0) + sum_k n_k log E(N_k(t0))`` instead,
        i.e. add :func:`poisson_constant`. Only the ``-sum log n_k!`` term
        is then omitted.

    Returns
    -------
    float
        ``-inf`` if a derivative with ``n_k > 0`` vanishes.
    """
    value = -float(model.psi(fof.t0))
    if fof.ks.size:
        la = model.log_abs_deriv(fof.ks, fof.t0)
        value += float((fof.nk * la).sum())
    if poisson_form:
        value += poisson_constant(fof)
    return value


def loglik_rho(model, data):
    """Log-likelihood under the ``rho``-appearance design.

    ``-psi(t0) + sum_{j<rho} n_j log|psi^(j)(t0)| + sum_i log|psi^(rho)(r_i)|``.
    """
    value = -float(model.psi(data.t0))
    if data.rho > 1:
        low = np.asarray(data.low_counts)
        ks = np.arange(1, data.rho)
        keep = low > 0
        if keep.any():
            value += float((low[keep] * model.log_abs_deriv(ks[keep], data.t0)).sum())
    if data.times.size:
        value += float(_log_abs_deriv_times(model, data.rho, data.times).sum())
    return value


def _log_abs_deriv_times(model, k, times):
    """``log|psi^(k)(r)|`` for many ``r`` (vectorized where the family allows)."""
    if isinstance(model, PlnParams):
        from .models.pln import _log_omega_positive

        r = np.asarray(times, dtype=float)
        lw = _log_omega_positive(np.full(r.shape, k), model.mu + np.log(r), model.sigma)
        return math.log(model.gamma) + gammaln(k + 1.0) - k * np.log(r) + lw
    if isinstance(model, Ldr1Params) and not model.is_linear and model.c > 0 and model.b > 0:
        a, b, c = model.a, model.b, model.c
        r = np.asarray(times, dtype=float)
        xi = b + c * r
        rising = np.log1p(c * np.arange(k - 1)).sum()
        return math.log(a) + np.log1p(c * (1.0 - r) / xi) / c - (k - 1) * np.log(xi) + rising
    return np.array([model.log_abs_deriv(np.array([k]), float(r))[0] for r in times])


# ---------------------------------------------------------------------------
# shape parameterizations (scale fixed to 1, profiled later)


class _Family:
    """Maps unconstrained vectors to unit-scale models of one family."""

    name = None
    n_params = None

    def unit(self, x):
        raise NotImplementedError

    def starts(self, fof, rng, n):
        raise NotImplementedError


class _Ldr1Interior(_Family):
    name, n_params = "ldr1", 3

    def unit(self, x):
        return Ldr1Params(1.0, math.exp(x[0]), math.exp(x[1]))

    def starts(self, fof, rng, n):
        b0, c0 = _d1d2_seed(fof)
        x0 = np.log([b0, c0])
        return [x0] + [x0 + rng.normal(0.0, 1.0, 2) for _ in range(n - 1)]


class _Ldr1Power(_Family):
    """b = 0 boundary of LDR1, c = 1 + exp(x)."""

    name, n_params = "ldr1", 2

    def unit(self, x):
        return Ldr1Params(1.0, 0.0, 1.0 + math.exp(x[0]))

    def starts(self, fof, rng, n):
        return [np.array([0.0])] + [rng.normal(0.0, 1.5, 1) for _ in range(n - 1)]


class _Ldr2(_Family):
    name, n_params = "ldr2", 4

    def unit(self, x):
        return Ldr2Params(math.exp(x[0]), Ldr1Params(1.0, math.exp(x[1]), math.exp(x[2])))

    def starts(self, fof, rng, n):
        b0, c0 = _d1d2_seed(fof)
        x0 = np.log([0.1, b0, c0])
        return [x0] + [x0 + rng.normal(0.0, 1.0, 3) for _ in range(n - 1)]


class _Rdr1(_Family):
    name, n_params = "rdr1", 5

    def __init__(self, t0):
        self.t0 = t0

    def unit(self, x):
        b1 = math.exp(x[0])
        return Rdr1Params(1.0, b1, b1 + math.exp(x[1]), math.exp(x[2]), math.exp(x[3]), self.t0)

    def starts(self, fof, rng, n, ldr1=None):
        if ldr1 is not None and ldr1.b > 0 and ldr1.c > 0 and math.isfinite(ldr1.c):
            b, c = ldr1.b, ldr1.c
        else:
            b, c = _d1d2_seed(fof)
        # RDR1 with c2 -> 0 is LDR1 with b = b1/c1, c = 1/c1
        c1, b1 = 1.0 / c, b / c
        base = [
            np.log([b1, b1 + 1.0 * fof.t0, c1, 0.05]),
            np.log([b1 / 2, 3.0 * fof.t0, c1 / 2, 0.3]),
            np.log([0.1 * fof.t0, 10.0 * fof.t0, 0.2, 2.0]),
        ]
        base = [np.array([x[0], math.log(math.exp(x[1]) - math.exp(x[0])) if x[1] > x[0] else 0.0,
                          x[2], x[3]]) for x in base]
        out = base[:n]
        while len(out) < n:
            out.append(base[len(out) % len(base)] + rng.normal(0.0, 0.7, 4))
        return out


class _Pln(_Family):
    name, n_params = "pln", 3

    def unit(self, x):
        return PlnParams(x[0], math.exp(x[1]), 1.0)

    def starts(self, fof, rng, n, data=None):
        if fof is not None and fof.n_plus:
            ks = fof.ks.astype(float)
            w = fof.nk / fof.nk.sum()
            m = float((w * np.log(ks)).sum())
            v = float((w * (np.log(ks) - m) ** 2).sum())
        else:
            m, v = 0.0, 1.0
        x0 = np.array([m - math.log(fof.t0 if fof is not None else 1.0), 0.5 * math.log(max(v, 0.05))])
        return [x0] + [x0 + rng.normal(0.0, 0.7, 2) for _ in range(n - 1)]


def _d1d2_seed(fof):
    """Least-squares line through the D1/D2 curve, clamped to valid values."""
    try:
        t = default_grid(fof.t0, 50)
        t = t[t >= 0.5 * fof.t0]
        y = hat_xi(fof, t)
        slope, intercept = np.polyfit(t, y, 1)
    except Exception:
        return 1.0 * fof.t0, 0.5
    b0 = intercept if np.isfinite(intercept) and intercept > 1e-3 * fof.t0 else 1e-2 * fof.t0
    c0 = slope if np.isfinite(slope) and slope > 1e-3 else 1e-2
    return float(b0), float(min(c0, 50.0))


# ---------------------------------------------------------------------------
# optimizer


def _profiled(unit_model, loglik_unit, n):
    """Profile the scale: returns (loglik, scale) for a unit-scale model."""
    try:
        g0, shape_term = loglik_unit(unit_model)
    except (ArithmeticError, ValueError):
        return -math.inf, math.nan
    if not (g0 > 0 and math.isfinite(g0) and math.isfinite(shape_term)):
        return -math.inf, math.nan
    if n == 0:
        return -g0 * 0.0, 0.0
    return -n + n * math.log(n / g0) + shape_term, n / g0


def _nelder_mead(fun, x0, maxfev, xatol=XATOL, fatol=FATOL):
    """Nelder-Mead with restarts from the incumbent until it stops improving."""
    res = minimize(fun, x0, method="Nelder-Mead",
                   options=dict(xatol=xatol, fatol=fatol, maxfev=maxfev, maxiter=maxfev))
    nfev, best = res.nfev, res
    for _ in range(4):
        if nfev >= maxfev or not np.isfinite(best.fun):
            break
        again = minimize(fun, best.x, method="Nelder-Mead",
                         options=dict(xatol=xatol, fatol=fatol, maxfev=maxfev - nfev,
                                      maxiter=maxfev - nfev))
        nfev += again.nfev
        improved = best.fun - again.fun
        if again.fun <= best.fun:
            best = again
        if improved < fatol:
            break
    success = bool(best.success) and nfev < maxfev
    return best.x, float(best.fun), nfev, success


def _run_starts(family, starts, loglik_unit, n, maxfev, fast=None, tol=(XATOL, FATOL)):
    """Nelder-Mead from each start; ``fast(x)``, if given, returns the profiled loglik directly."""

    def objective(x):
        if not np.all(np.isfinite(x)) or np.any(np.abs(x) > 700):
            return math.inf
        try:
            if fast is not None:
                ll = fast(x)
            else:
                ll, _ = _profiled(family.unit(x), loglik_unit, n)
        except (ValueError, ArithmeticError, OverflowError):
            return math.inf
        return -ll if math.isfinite(ll) else math.inf

    best, total, history = None, 0, []
    for i, x0 in enumerate(starts):
        x, fun, nfev, ok = _nelder_mead(objective, np.asarray(x0, dtype=float), maxfev, *tol)
        total += nfev
        history.append((i, -fun, ok))
        # ties resolved by lowest start index
        if best is None or fun < best[1]:
            best = (x, fun, ok)
    return best, total, history


def _finish(family, best, total, history, n_starts, loglik_unit, n, t0):
    x, fun, ok = best
    model = family.unit(x)
    ll, scale = _profiled(model, loglik_unit, n)
    params = model.scaled(scale)
    return FitResult(params, ll, 2 * family.n_params - 2 * ll, ok, total, n_starts,
                     family=family.name, t0=t0, history=history)


def _ldr1_fast_profile(fof):
    """Profiled LDR1 loglik over ``(log b, log c)`` with the FoF sums precomputed.

    Same value as the generic route through :class:`Ldr1Params`, without
    building a model per evaluation.
    """
    ks, nk, t0 = fof.ks, fof.nk, fof.t0
    n = float(nk.sum())
    kmax = int(ks.max())
    # W[j] = number of species seen at least j + 2 times
    dense = fof.dense(kmax).astype(float)
    tail = np.cumsum(dense[::-1])[::-1]
    w = tail[1:]
    j = np.arange(w.size, dtype=float)
    a_sum = float((nk * (ks - 1)).sum())
    log_n = math.log(n)

    def f(x):
        b, c = math.exp(x[0]), math.exp(x[1])
        xi = b + c * t0
        term = n * math.log1p(c * (1.0 - t0) / xi) / c - a_sum * math.log(xi)
        if w.size:
            term += float(w @ np.log1p(j * c))
        big_l = math.log1p(c * t0 / b)
        z = (c - 1.0) * big_l / c
        log_exprel = math.log(math.expm1(z) / z) if z != 0 else 0.0
        log_g0 = math.log(b) + math.log1p(c / b) / c + math.log(big_l / c) + log_exprel
        return -n + n * (log_n - log_g0) + term

    return f


def _fof_loglik_unit(fof):
    ks, nk, t0 = fof.ks, fof.nk, fof.t0

    def f(model):
        g0 = float(model.psi(t0))
        return g0, float((nk * model.log_abs_deriv(ks, t0)).sum())

    return f


def _rho_loglik_unit(data):
    low = np.asarray(data.low_counts)
    ks = np.arange(1, data.rho)
    keep = low > 0

    def f(model):
        g0 = float(model.psi(data.t0))
        term = 0.0
        if keep.any():
            term += float((low[keep] * model.log_abs_deriv(ks[keep], data.t0)).sum())
        if data.times.size:
            term += float(_log_abs_deriv_times(model, data.rho, data.times).sum())
        return g0, term

    return f


def _family_for(family, t0):
    if family not in FAMILIES:
        raise ValidationError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    return {"ldr1": _Ldr1Interior, "ldr2": _Ldr2, "pln": _Pln}.get(family, lambda: _Rdr1(t0))()


def mle(fof, family, n_starts=N_STARTS, seed=0, start=None, maxfev=4000, tol=(XATOL, FATOL)):
    """Maximum-likelihood fit of a model family to a FoF.

    Parameters
    ----------
    fof : FrequencyOfFrequencies
        Must contain at least one species.
    family : {'ldr1', 'ldr2', 'rdr1', 'pln'}
    n_starts : int, optional
        Number of Nelder-Mead starts. The first start comes from a straight
        line fitted to the D1/D2 curve (or from the LDR1 fit for RDR1); the
        rest are seeded random perturbations.
    seed : int, optional
        Seed for the perturbations (fits are deterministic).
    start : EsacModel, optional
        Use this model as the only start (``n_starts`` is then ignored).
        Used by the bootstrap to refit replicates cheaply.
    maxfev : int, optional
        Evaluation budget per start.
    tol : (float, float), optional
        Nelder-Mead ``xatol`` (transformed coordinates) and ``fatol``.

    Returns
    -------
    FitResult
        ``converged`` is False when the best start ran out of budget, for
        example when the likelihood keeps increasing along a ridge.

    Notes
    -----
    For LDR1 the power-law boundary ``b = 0`` is searched separately over
    ``c > 1`` and the better of interior and boundary is returned. LDR2
    likewise competes against its ``alpha = 0`` boundary (the LDR1 fit).
    """
    if fof.n_plus == 0:
        raise InsufficientDataError("cannot fit an empty FoF")
    rng = np.random.default_rng(seed)
    loglik_unit = _fof_loglik_unit(fof)
    n = fof.n_plus
    fam = _family_for(family, fof.t0)

    if start is not None:
        starts = [_encode(start, fam)]
    elif family == "rdr1":
        ldr1_fit = mle(fof, "ldr1", n_starts=2, seed=seed)
        starts = fam.starts(fof, rng, n_starts, ldr1=ldr1_fit.params)
    else:
        starts = fam.starts(fof, rng, n_starts)

    fast = _ldr1_fast_profile(fof) if family == "ldr1" else None
    best, total, history = _run_starts(fam, starts, loglik_unit, n, maxfev, fast, tol)
    result = _finish(fam, best, total, history, len(starts), loglik_unit, n, fof.t0)

    if family == "ldr1" and start is None:
        power = _Ldr1Power()
        pstarts = power.starts(fof, rng, max(2, n_starts // 4))
        pbest, ptotal, _ = _run_starts(power, pstarts, loglik_unit, n, maxfev)
        presult = _finish(power, pbest, ptotal, [], len(pstarts), loglik_unit, n, fof.t0)
        result.n_evals += presult.n_evals
        if presult.loglik > result.loglik:
            presult.aic = 2 * 3 - 2 * presult.loglik
            presult.n_evals = result.n_evals
            presult.start_points = result.start_points + presult.start_points
            result = presult
    elif family == "ldr2" and start is None:
        base = mle(fof, "ldr1", n_starts=n_starts, seed=seed)
        if base.loglik > result.loglik:
            result = FitResult(Ldr2Params(0.0, base.params), base.loglik, 2 * 4 - 2 * base.loglik,
                               base.converged, result.n_evals + base.n_evals, result.start_points,
                               family="ldr2", t0=fof.t0)
    return result


def _encode(model, fam):
    """Unconstrained coordinates of ``model`` for family ``fam``."""
    if isinstance(fam, _Ldr1Interior):
        m = model if isinstance(model, Ldr1Params) else model.inner
        return np.log([max(m.b, 1e-8), max(m.c, 1e-8)])
    if isinstance(fam, _Ldr2):
        return np.log([max(model.zero_rate / model.inner.a, 1e-8), max(model.inner.b, 1e-8),
                       max(model.inner.c, 1e-8)])
    if isinstance(fam, _Rdr1):
        return np.log([max(model.b1, 1e-8), model.b2 - model.b1, model.c1, max(model.c2, 1e-8)])
    if isinstance(fam, _Pln):
        return np.array([model.mu, math.log(model.sigma)])
    raise ValidationError("cannot encode start")


def mle_rho(data, family, n_starts=N_STARTS, seed=0, maxfev=4000):
    """Maximum-likelihood fit under the ``rho``-appearance design.

    As in :func:`mle` the scale is profiled (for the Poisson-lognormal model
    ``gamma = n_+ / (1 - omega_0)``).
    """
    if data.n_plus == 0:
        raise InsufficientDataError("no species recorded")
    rng = np.random.default_rng(seed)
    loglik_unit = _rho_loglik_unit(data)
    fam = _family_for(family, data.t0)
    # seed shapes from the FoF implied by low counts and rho-appearance times
    pseudo = FrequencyOfFrequencies(
        {**{k: n for k, n in enumerate(data.low_counts, start=1)},
         data.rho: int(data.times.size) + 0}, data.t0)
    if family == "rdr1":
        starts = fam.starts(pseudo, rng, n_starts)
    else:
        starts = fam.starts(pseudo, rng, n_starts)
    best, total, history = _run_starts(fam, starts, loglik_unit, data.n_plus, maxfev)
    return _finish(fam, best, total, history, len(starts), loglik_unit, data.n_plus, data.t0)


# ---------------------------------------------------------------------------
# goodness of fit


@dataclass
class GofResult:
    """Pearson chi-square test on pooled frequency cells."""

    statistic: float
    df: int
    p_value: float
    pooled_cells: list
    expected: np.ndarray = field(repr=False, default=None)
    observed: np.ndarray = field(repr=False, default=None)

    def to_dict(self):
        return to_jsonable({
            "statistic": self.statistic,
            "df": self.df,
            "p_value": self.p_value,
            "pooled_cells": self.pooled_cells,
            "expected": self.expected,
            "observed": self.observed,
        })


def pool_cells(expected, observed, n_total, min_expected=5.0):
    """Pool frequency cells for the chi-square test.

    Cells ``k = 1, 2, ...`` are kept separately while each has expected count
    at least ``min_expected``; the first cell below it and everything after
    (including frequencies never observed) form one tail cell whose
    expectation is ``n_total`` minus the kept expectations. A tail below
    ``min_expected`` is merged into the last kept cell.

    Returns
    -------
    labels, expected, observed
    """
    expected = np.asarray(expected, dtype=float)
    observed = np.asarray(observed, dtype=float)
    cut = 0
    while cut < expected.size and expected[cut] >= min_expected:
        cut += 1
    cut = min(cut, expected.size)
    e = list(expected[:cut]) + [n_total - expected[:cut].sum()]
    o = list(observed[:cut]) + [n_total - observed[:cut].sum()]
    labels = [str(k) for k in range(1, cut + 1)] + [f">={cut + 1}"]
    if e[-1] < min_expected and len(e) > 1:
        tail_e, tail_o = e.pop(), o.pop()
        e[-1] += tail_e
        o[-1] += tail_o
        labels.pop()
        labels[-1] = f">={cut}"
    return labels, np.array(e), np.array(o)


def pearson_from_expected(expected, observed, n_total, n_shape, min_expected=5.0):
    """Chi-square test given per-frequency expected and observed counts (k = 1..K)."""
    labels, e, o = pool_cells(expected, observed, n_total, min_expected)
    df = len(e) - 1 - n_shape
    if df < 1:
        raise InsufficientDataError(
            f"{len(e)} pooled cells leave {df} degrees of freedom for {n_shape} shape parameters"
        )
    stat = float(((o - e) ** 2 / e).sum())
    return GofResult(stat, df, float(chi2.sf(stat, df)), labels, e, o)


def pearson_gof(fit, fof):
    """Pearson goodness of fit of a fitted model, conditional on ``n_+``.

    Expected counts are ``n_+ p_k(t0)``; degrees of freedom are the pooled
    cell count minus one minus the number of free shape parameters.
    """
    model = fit.params if hasattr(fit, "params") else fit
    kmax = max(fof.max_k, 1)
    ks = np.arange(1, kmax + 1)
    expected = fof.n_plus * model.pk(ks, fof.t0)
    return pearson_from_expected(expected, fof.dense(kmax), fof.n_plus, model.n_shape)
