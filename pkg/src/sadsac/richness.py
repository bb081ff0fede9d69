"""Species richness from the rare-species counts ``N1, N2, N3``.

Rare species (seen at most three times) are assumed to follow an LDR1
model, whose slope ``c`` is estimated by

.. math::

    \\hat c^* = \\frac{3 N_1 N_3}{2 N_2^2} - 1, \\qquad
    \\hat c_F = \\max(\\min(\\hat c^*, N_1 / (2 N_2)), 0),

and the unseen species count by ``N1**2 / (2 (1 - c_F) N2)``, which is
``inf`` once ``c_F >= 1``. With ``c_F = 0`` this is Chao1.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import exprel
from scipy.stats import norm

from .data import to_jsonable
from .errors import DomainError, InsufficientDataError, NumericError, ValidationError

METHODS = ("chao1", "chao1_corrected", "e_star")
XI_RULES = ("zeroth_order", "modified_first_order")


@dataclass(frozen=True)
class RichnessEstimate:
    """Unseen-species and total richness estimates (``inf`` allowed)."""

    unseen: float
    total: float
    c_hat_star: float
    c_hat_f: float
    method: str

    def to_dict(self):
        return to_jsonable(self.__dict__)


def _rare(fof):
    return fof.n(1), fof.n(2), fof.n(3)


def c_star(fof):
    """Plug-in LDR1 slope of the rare species, ``3 N1 N3 / (2 N2^2) - 1``.

    Raises
    ------
    InsufficientDataError
        If ``N2 = 0``.
    """
    n1, n2, n3 = _rare(fof)
    if n2 == 0:
        raise InsufficientDataError("c* is undefined when no species is seen exactly twice")
    return float(Fraction(3 * n1 * n3, 2 * n2 * n2) - 1)


def c_f(fof):
    """``c*`` clamped to ``[0, N1 / (2 N2)]``."""
    n1, n2, _ = _rare(fof)
    return float(min(max(c_star(fof), 0.0), Fraction(n1, 2 * n2)))


def unseen(fof, method="e_star"):
    """Estimate the number of species not yet seen.

    Parameters
    ----------
    fof : FrequencyOfFrequencies
    method : {'e_star', 'chao1', 'chao1_corrected'}
        ``chao1`` is ``N1^2 / (2 N2)``; ``chao1_corrected`` multiplies it by
        ``(S - 1) / S`` with ``S`` the number of individuals; ``e_star``
        divides Chao1 by ``1 - c_F``.

    Returns
    -------
    RichnessEstimate
        ``N2 = 0`` gives ``inf`` unseen species when ``N1 > 0`` and 0
        otherwise. ``c_F >= 1`` gives ``inf``.

    Examples
    --------
    >>> from sadsac.data import load_dataset
    >>> round(unseen(load_dataset("accident")).total, 1)
    8249.2
    """
    n1, n2, n3 = _rare(fof)
    return unseen_from_counts(n1, n2, n3, method, fof.s_total, fof.n_plus)


def unseen_from_counts(n1, n2, n3, method="e_star", s_total=None, n_plus=0):
    """:func:`unseen` from the rare counts alone (bootstrap replicates use this).

    ``s_total`` is needed only for ``chao1_corrected``; ``n_plus`` is added to
    form ``total``.
    """
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    cs = cf = math.nan
    if n2 == 0:
        value = math.inf if n1 > 0 else 0.0
    else:
        exact = Fraction(3 * n1 * n3, 2 * n2 * n2) - 1
        cs = float(exact)
        cf = float(min(max(exact, 0), Fraction(n1, 2 * n2)))
        value = n1 * n1 / (2.0 * n2)
        if method == "chao1_corrected":
            if not s_total:
                raise ValidationError("chao1_corrected needs the number of individuals")
            value *= (s_total - 1) / s_total
        elif method == "e_star":
            value = value / (1.0 - cf) if cf < 1 else math.inf
    return RichnessEstimate(value, n_plus + value, cs, cf, method)


@dataclass(frozen=True)
class TruncPoissonTest:
    T: float
    var_T: float
    z: float
    p_value: float

    def to_dict(self):
        return to_jsonable(self.__dict__)


def trunc_poisson_test(fof):
    """Test of the zero-truncated Poisson (``c = 0``) model for rare species.

    ``T = 3 N1 N3 - 2 N2 (N2 - 1)`` has mean zero under ``c = 0``; large
    values point towards heavier-tailed rare species. The p-value is the
    upper normal tail of ``T / sqrt(Var(T))``.
    """
    n1, n2, n3 = _rare(fof)
    t = 3 * n1 * n3 - 2 * n2 * (n2 - 1)
    var = 9 * n1 * n3 * (n1 + n3 - 1) + 8 * n2 * (3 - 5 * n2 + 2 * n2 * n2)
    if var <= 0:
        raise InsufficientDataError("variance estimate of T is not positive; the test is degenerate")
    z = t / math.sqrt(var)
    return TruncPoissonTest(float(t), float(var), z, float(norm.sf(z)))


def _linear_increment(xi0, c, span):
    """``int_0^span (1 + c s / xi0)^(-1/c) ds``: the nested integral for linear xi."""
    if math.isinf(span):
        return xi0 / (1.0 - c) if c < 1 else math.inf
    if c == 0:
        return -xi0 * math.expm1(-span / xi0)
    log_u = math.log1p(c * span / xi0)
    return xi0 / c * log_u * float(exprel((c - 1.0) * log_u / c))


def extrapolate_psi(fof, t, xi_rule="modified_first_order"):
    """Extrapolate the expected SAC beyond the survey end.

    .. math::

        \\psi(t) = \\psi(t_0) + \\psi'(t_0) \\int_{t_0}^t
        \\exp\\Big(-\\int_{t_0}^x \\frac{dy}{\\xi(y)}\\Big)\\, dx

    with ``psi(t0) = n_+`` and ``psi'(t0) = n_1 / t0``.

    Parameters
    ----------
    fof : FrequencyOfFrequencies
    t : float
        Target time, ``t >= t0``; ``inf`` gives the richness limit.
    xi_rule : {'modified_first_order', 'zeroth_order'} or callable
        ``zeroth_order`` holds ``xi`` at ``t0 n_1 / (2 n_2)``; the modified
        first-order rule adds slope ``c_F``. A callable ``xi(x)`` is
        integrated numerically and must stay positive on ``[t0, t]``.
    """
    t0 = fof.t0
    if not t >= t0:
        raise DomainError(f"extrapolation needs t >= t0 = {t0}, got {t}")
    n1, n2, _ = _rare(fof)
    base, slope = float(fof.n_plus), n1 / t0
    span = t - t0
    if span == 0 or n1 == 0:
        return base
    if callable(xi_rule):
        return base + slope * _nested_quad(xi_rule, t0, t)
    if xi_rule not in XI_RULES:
        raise ValidationError(f"unknown xi rule {xi_rule!r}")
    if n2 == 0:
        return base + slope * span
    xi0 = t0 * n1 / (2.0 * n2)
    c = 0.0 if xi_rule == "zeroth_order" else c_f(fof)
    return base + slope * _linear_increment(xi0, c, span)


def _nested_quad(xi, t0, t):
    def checked(x):
        v = float(xi(x))
        if not v > 0:
            raise DomainError(f"xi({x:.6g}) = {v} is not positive")
        return 1.0 / v

    @lru_cache(maxsize=None)
    def inner(x):
        return quad(checked, t0, x, epsabs=0.0, epsrel=1e-11, limit=200)[0]

    val, err = quad(lambda x: math.exp(-inner(x)), t0, t, epsabs=0.0, epsrel=1e-10, limit=200)
    if not np.isfinite(val):
        raise NumericError("extrapolation integral did not converge")
    return val
