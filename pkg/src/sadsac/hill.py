"""Hill numbers of a fitted community.

With finite total rate ``Lambda`` and ``lambda`` distributed as ``nu / Lambda``
(the rate of the species an individual belongs to),

.. math::

    {}^qD = \\Lambda\\, E[\\lambda^{q-1}]^{1/(1-q)}, \\qquad
    {}^1D = \\Lambda \\exp(-E[\\log \\lambda]).

For LDR1 this ``lambda`` is Gamma(1/c, rate b/c); for RDR1 it is the sum
of independent Gamma(c1, b1) and Gamma(c2, b2) variables; for the
Poisson-lognormal model it is lognormal. ``^0D`` is the expected number of
species. When ``Lambda`` is infinite the values are limits of the finite
case along the first-appearance rate ``Lambda_t`` as ``t -> 0``.
"""

import math

import numpy as np
from scipy.integrate import quad
from scipy.special import betaln, digamma, gammaln

from .errors import DomainError, NumericError
from .models import Ldr1Params, Ldr2Params, PlnParams, Rdr1Params

Q_ONE_BAND = 1e-6
BETA_ALG_MAX = 50.0


def _check_q(q):
    q = float(q)
    if not (q >= 0 and math.isfinite(q)):
        raise DomainError(f"Hill order must be a finite q >= 0, got {q}")
    return q


def _near_one(q):
    return abs(q - 1.0) < Q_ONE_BAND


def hill_ldr1(params, q):
    """Hill number of order ``q`` for an LDR1 model (``inf`` allowed).

    Parameters
    ----------
    params : Ldr1Params
    q : float
        Order, ``q >= 0``.

    Notes
    -----
    For ``c > 0`` the value is infinite iff ``q <= 1 - 1/c``. For the power
    law (``b = 0``) the total rate is infinite and the limit definition gives
    ``inf`` for ``q <= 1 - 1/c`` and 0 above it; the linear ESAC
    (``c = inf``, zero-rate species only) gives ``inf`` for ``q <= 1`` and 0
    above.

    Examples
    --------
    >>> round(hill_ldr1(Ldr1Params(1.0, 1.0, 0.0), 2.0), 6)
    2.718282
    """
    q = _check_q(q)
    a, b, c = params.a, params.b, params.c
    if c == 0:
        return a * b * math.exp(1.0 / b)
    if math.isinf(c):
        return math.inf if q <= 1 else 0.0
    if q <= 1.0 - 1.0 / c:
        return math.inf
    if b == 0:
        return 0.0
    if c < 1e-6:
        # large gamma shape: log-gamma differences cancel, use the expansion in c
        return math.exp(math.log(a * b) + math.log1p(c / b) / c + 0.5 * c * (2.0 - q))
    shape = 1.0 / c
    log_lead = math.log(a) + math.log1p(c / b) / c + math.log(b / c)
    if _near_one(q):
        return math.exp(log_lead - digamma(shape))
    return math.exp(log_lead + (gammaln(shape + q - 1.0) - gammaln(shape)) / (1.0 - q))


def hill_ldr2(params, q):
    """Hill number for LDR2: ``inf`` for ``q <= 1`` when zero-rate species exist."""
    q = _check_q(q)
    alpha, inner = params.zero_rate, params.inner
    if alpha == 0:
        return hill_ldr1(inner, q)
    if q <= 1:
        return math.inf
    d1 = hill_ldr1(inner, q)
    lam1 = inner.total_rate()
    if d1 == 0 or math.isinf(lam1) or math.isinf(d1):
        return d1
    return d1 * (lam1 / (alpha + lam1)) ** (q / (1.0 - q))


def _beta_expectation(f, c1, c2):
    """``E[f(theta, 1 - theta)]`` for ``theta ~ Beta(c2, c1)``.

    Moderate shapes use algebraic endpoint weights on ``[0, 1]``. Large
    shapes (a sharply concentrated law, as on the ``b2, c2 -> inf`` ridge)
    are integrated over ``x = logit(theta)``, where the density is smooth
    with exponential tails.
    """
    if max(c1, c2) <= BETA_ALG_MAX:
        out = quad(lambda th: f(th, 1.0 - th), 0.0, 1.0, weight="alg", wvar=(c2 - 1.0, c1 - 1.0),
                   epsabs=0.0, epsrel=1e-10, limit=200, full_output=1)
        val, err = out[0], out[1]
        if math.isfinite(val) and not (len(out) > 3 and err > 1e-7 * abs(val)):
            return val / math.exp(betaln(c2, c1))
    log_norm = betaln(c2, c1)

    def g(x):
        log_th, log_om = -np.logaddexp(0.0, -x), -np.logaddexp(0.0, x)
        w = math.exp(c2 * log_th + c1 * log_om - log_norm)
        return f(math.exp(log_th), math.exp(log_om)) * w if w > 0 else 0.0

    mode = math.log(c2 / c1)
    spread = 1.0 / math.sqrt(min(c1, c2))
    total, err_total = 0.0, 0.0
    for lo, hi in ((-math.inf, mode - 10 * spread), (mode - 10 * spread, mode + 10 * spread),
                   (mode + 10 * spread, math.inf)):
        val, err = quad(g, lo, hi, epsabs=0.0, epsrel=1e-11, limit=400)
        total, err_total = total + val, err_total + err
    if not math.isfinite(total) or err_total > 1e-7 * abs(total):
        raise NumericError(f"Hill quadrature failed: estimate {total:.6g}, error {err_total:.3g}")
    return total


def hill_rdr1(params, q):
    """Hill number of order ``q`` for an RDR1 model.

    The rate is written as ``X r(theta)`` with ``X ~ Gamma(c1 + c2)``,
    ``theta ~ Beta(c2, c1)`` independent and
    ``1 / r = (1 - theta) / b1 + theta / b2``, which turns the moment into
    a one-dimensional integral over ``theta``.

    Raises
    ------
    DomainError
        If ``b1 = 0`` (infinite total rate; no closed form is available).
    """
    q = _check_q(q)
    if params.c2 == 0:
        return hill_ldr1(params.reduce_to_ldr1(), q)
    if params.b1 == 0:
        raise DomainError("Hill numbers for RDR1 need b1 > 0 (the total rate is infinite)")
    a, b1, b2, c1, c2, t0 = (params.a, params.b1, params.b2, params.c1, params.c2, params.t0)
    s = c1 + c2
    log_lam = math.log(a) + c1 * math.log1p(t0 / b1) + c2 * math.log1p(t0 / b2)

    def log_r(th, om):
        return -math.log(om / b1 + th / b2)

    if _near_one(q):
        e_log_r = _beta_expectation(log_r, c1, c2)
        return math.exp(log_lam - digamma(s) + e_log_r)
    if s + q - 1.0 <= 0:
        return math.inf
    moment = _beta_expectation(lambda th, om: math.exp((1.0 - q) * log_r(th, om)), c1, c2)
    log_moment = gammaln(s + q - 1.0) - gammaln(s) + math.log(moment)
    return math.exp(log_lam + log_moment / (1.0 - q))


def hill_pln(params, q):
    """Hill number for the Poisson-lognormal model, ``gamma exp(-q sigma^2 / 2)``."""
    q = _check_q(q)
    return params.gamma * math.exp(-0.5 * q * params.sigma ** 2)


def hill(model, q):
    """Hill number of order ``q`` for any supported model (``inf`` allowed)."""
    if isinstance(model, Ldr1Params):
        return hill_ldr1(model, q)
    if isinstance(model, Ldr2Params):
        return hill_ldr2(model, q)
    if isinstance(model, Rdr1Params):
        return hill_rdr1(model, q)
    if isinstance(model, PlnParams):
        return hill_pln(model, q)
    raise DomainError(f"no Hill numbers for {type(model).__name__}")


def hill_e_d(model):
    """``^0D``, the expected number of species ``lim psi(t)``."""
    return float(model.e_d())
