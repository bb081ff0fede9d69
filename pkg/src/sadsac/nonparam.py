"""Model-free estimates of the expected species accumulation curve (ESAC).

All estimators are linear in the FoF counts. The derivative estimator

.. math::

    \\hat\\psi^{(j)}(t) = \\frac{(-1)^{j+1}}{t_0^j}\\sum_{k\\ge j}
        \\frac{k!}{(k-j)!} n_k (1 - t/t_0)^{k-j}

is unbiased for :math:`\\psi^{(j)}(t)`; because the :math:`N_k(t_0)` are
independent Poisson variables, its variance and covariances are estimated by
the same sums with squared coefficients. Ratios such as
:math:`\\hat\\xi(t) = -\\hat\\psi^{(1)}/\\hat\\psi^{(2)}` get delta-method bands.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

from .errors import DomainError, SingularPointError

CURVE_NAMES = (
    "d1d2",
    "d2d3",
    "check_poisson",
    "check_geometric",
    "check_logseries",
    "check_powerlaw_logD",
    "loglog",
)

# short aliases accepted by the CLI ``--plot`` flag
PLOT_ALIASES = {
    "poisson": "check_poisson",
    "geometric": "check_geometric",
    "logseries": "check_logseries",
    "powerlaw": "check_powerlaw_logD",
}


def _check_t(fof, t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(t > fof.t0):
        raise DomainError(f"t must lie in (0, t0={fof.t0}]")
    return t


def _falling(k, j):
    """log of k!/(k-j)! for integer arrays k >= j."""
    return gammaln(k + 1.0) - gammaln(k - j + 1.0)


def _weighted_power_sum(fof, log_coef, power, t):
    """sum_k n_k exp(log_coef_k) u**power_k over the sparse support, u = 1 - t/t0."""
    u = 1.0 - np.asarray(t, dtype=float)[..., None] / fof.t0
    terms = fof.nk * np.exp(log_coef) * u ** power
    return terms.sum(axis=-1)


def hat_psi_deriv(fof, j, t):
    """Unbiased estimate of the ``j``-th derivative of the ESAC at ``t``.

    Parameters
    ----------
    fof : FrequencyOfFrequencies
    j : int
        Derivative order, at least 1.
    t : float or array_like
        Evaluation time(s) in ``(0, t0]``.

    Returns
    -------
    float or ndarray
        Same shape as ``t``. At ``t = t0`` only the ``k = j`` term survives,
        so the sign is exactly ``(-1)**(j+1)``.
    """
    if j < 1:
        raise DomainError("derivative order must be >= 1")
    t = _check_t(fof, t)
    keep = fof.ks >= j
    if not keep.any():
        return np.zeros_like(t)[()]
    ks = fof.ks[keep]
    sub = _Sparse(ks, fof.nk[keep], fof.t0)
    total = _weighted_power_sum(sub, _falling(ks, j), ks - j, t)
    return ((-1.0) ** (j + 1) * total / fof.t0 ** j)[()]


class _Sparse(NamedTuple):
    ks: np.ndarray
    nk: np.ndarray
    t0: float


def hat_psi_cov(fof, i, j, t):
    """Plug-in covariance of ``hat_psi_deriv(fof, i, t)`` and ``hat_psi_deriv(fof, j, t)``.

    Uses ``Var(N_k) = E(N_k)`` estimated by ``n_k``.
    """
    t = _check_t(fof, t)
    m = max(i, j)
    keep = fof.ks >= m
    if not keep.any():
        return np.zeros_like(t)[()]
    ks = fof.ks[keep]
    sub = _Sparse(ks, fof.nk[keep], fof.t0)
    total = _weighted_power_sum(sub, _falling(ks, i) + _falling(ks, j), 2 * ks - i - j, t)
    return ((-1.0) ** (i + j) * total / fof.t0 ** (i + j))[()]


def _ratio(fof, j, t):
    num = hat_psi_deriv(fof, j, t)
    den = hat_psi_deriv(fof, j + 1, t)
    if np.any(den == 0):
        raise SingularPointError(f"estimated derivative of order {j + 1} is zero")
    return num, den


def hat_xi(fof, t):
    """Estimated derivative ratio ``-psi'(t)/psi''(t)`` (the D1/D2 curve).

    At ``t = t0`` this is ``t0 * n_1 / (2 n_2)``.

    Raises
    ------
    SingularPointError
        If the second-derivative estimate vanishes (e.g. only singletons).
    """
    num, den = _ratio(fof, 1, t)
    return -num / den


class Band(NamedTuple):
    value: float
    lower: float
    upper: float


def _ratio_band(fof, j, t, z):
    num, den = _ratio(fof, j, t)
    var = (
        hat_psi_cov(fof, j, j, t) / den ** 2
        + num ** 2 * hat_psi_cov(fof, j + 1, j + 1, t) / den ** 4
        - 2 * num * hat_psi_cov(fof, j, j + 1, t) / den ** 3
    )
    value = -num / den
    with np.errstate(invalid="ignore"):
        half = z * np.sqrt(np.where(var >= 0, var, np.nan))
    return Band(value, value - half, value + half)


def d1d2_band(fof, t, z=1.96):
    """Delta-method pointwise band for :func:`hat_xi`.

    The half width is ``z * sqrt(Var)`` where ``Var`` combines the estimated
    variances of the first two derivative estimates and their covariance.
    A negative variance estimate (possible through cancellation) yields
    NaN bounds.
    """
    return _ratio_band(fof, 1, t, z)


def d2d3_band(fof, t, z=1.96):
    """Delta-method pointwise band for ``-psi''(t)/psi'''(t)`` (the D2/D3 curve)."""
    return _ratio_band(fof, 2, t, z)


def rarefaction(fof, t):
    """Expected number of species seen by ``t <= t0`` given the FoF.

    ``sum_k n_k (1 - (1 - t/t0)**k)``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > fof.t0):
        raise DomainError("rarefaction needs 0 <= t <= t0; use good_toulmin beyond t0")
    with np.errstate(divide="ignore"):
        log_u = np.log1p(-t[..., None] / fof.t0)
    return (fof.nk * -np.expm1(fof.ks * log_u)).sum(axis=-1)[()]


def good_toulmin(fof, t):
    """Alternating-series extrapolation ``n_+ + sum_k (-1)**(k+1) n_k (t/t0 - 1)**k``.

    Valid for ``t0 <= t < 2 t0``; the series diverges in expectation beyond.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < fof.t0) or np.any(t >= 2 * fof.t0):
        raise DomainError("good_toulmin needs t0 <= t < 2*t0 (the series may diverge beyond)")
    v = t[..., None] / fof.t0 - 1.0
    signs = np.where(fof.ks % 2 == 1, 1.0, -1.0)
    return (fof.n_plus + (signs * fof.nk * v ** fof.ks).sum(axis=-1))[()]


def expected_fof_interp(fof, j, t):
    """Expected ``N_j(t)`` for ``t <= t0`` given the FoF, by binomial thinning."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > fof.t0):
        raise DomainError("interpolation needs 0 <= t <= t0")
    p = t[..., None] / fof.t0
    return (fof.nk * binom.pmf(j, fof.ks, p)).sum(axis=-1)[()]


# ---------------------------------------------------------------------------
# diagnostic curves


@dataclass
class DiagnosticCurve:
    """Sampled diagnostic plot.

    ``t`` is the evaluation time and ``x`` the plotted abscissa (``log t``
    for the log-scale checks). Undefined band values are NaN. ``skipped``
    holds grid times that produced no point.
    """

    name: str
    t: np.ndarray
    x: np.ndarray
    value: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    xlabel: str = "t"
    ylabel: str = ""
    skipped: list = field(default_factory=list)
    reference_slope: float = None

    def to_csv(self):
        def cell(v):
            return "" if not np.isfinite(v) else repr(float(v))

        lines = ["t,value,lower,upper"]
        for row in zip(self.t, self.value, self.lower, self.upper):
            lines.append(",".join(cell(v) for v in row))
        return "\n".join(lines) + "\n"

    def slope(self):
        """Least-squares slope and R^2 of ``value`` against ``x``."""
        x, y = self.x, self.value
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        r2 = 1.0 - resid.var() / y.var() if y.var() > 0 else 1.0
        return slope, r2


def default_grid(t0, n=200):
    """``n`` equally spaced points in ``(0.01 t0, t0]``."""
    return t0 * np.linspace(0.01, 1.0, n + 1)[1:]


# transform g of psi'(t) and its derivative; None marks log transforms
_PSI1_TRANSFORMS = {
    "check_poisson": (np.log, lambda y: 1.0 / y, False, "log D1"),
    "check_geometric": (lambda y: y ** -0.5, lambda y: -0.5 * y ** -1.5, False, "D1^(-1/2)"),
    "check_logseries": (lambda y: 1.0 / y, lambda y: -1.0 / y ** 2, False, "1/D1"),
    "check_powerlaw_logD": (np.log, lambda y: 1.0 / y, True, "log D1"),
}


def diagnostic_curve(fof, name, grid=None, z=1.96):
    """Evaluate a named diagnostic curve with pointwise bands.

    Parameters
    ----------
    fof : FrequencyOfFrequencies
    name : str
        One of ``d1d2``, ``d2d3``, ``check_poisson``, ``check_geometric``,
        ``check_logseries``, ``check_powerlaw_logD`` or ``loglog`` (short
        aliases ``poisson``, ``geometric``, ``logseries``, ``powerlaw`` work
        too).
    grid : array_like, optional
        Times in ``(0, t0]``; defaults to :func:`default_grid`.
    z : float
        Normal quantile for the band.

    Notes
    -----
    A straight ``check_*`` curve supports the corresponding model: constant
    rates (log D1 linear in t), geometric, log-series, and the power law
    (log D1 linear in log t with slope ``-1/c``). Points where the curve or
    its band is undefined are skipped or carry NaN bands.
    """
    name = PLOT_ALIASES.get(name, name)
    if name not in CURVE_NAMES:
        raise DomainError(f"unknown diagnostic {name!r}")
    t = default_grid(fof.t0) if grid is None else np.asarray(grid, dtype=float)
    _check_t(fof, t)
    if np.any(np.diff(t) <= 0):
        raise DomainError("grid must be strictly increasing")

    skipped = []
    if name in ("d1d2", "d2d3"):
        j = 1 if name == "d1d2" else 2
        den = hat_psi_deriv(fof, j + 1, t)
        ok = den != 0
        skipped = t[~ok].tolist()
        t = t[ok]
        value, lower, upper = _ratio_band(fof, j, t, z) if t.size else (t, t, t)
        return DiagnosticCurve(
            name, t, t.copy(), np.asarray(value), np.asarray(lower), np.asarray(upper),
            ylabel="D1/D2" if j == 1 else "D2/D3", skipped=skipped,
            reference_slope=1.0 if j == 1 else None,
        )

    if name == "loglog":
        y = rarefaction(fof, t)
        ok = y > 0
        skipped = t[~ok].tolist()
        t = t[ok]
        value = np.log(y[ok])
        nan = np.full_like(value, np.nan)
        return DiagnosticCurve(name, t, np.log(t), value, nan, nan.copy(),
                               xlabel="log t", ylabel="log SAC", skipped=skipped)

    g, dg, logx, ylabel = _PSI1_TRANSFORMS[name]
    y = hat_psi_deriv(fof, 1, t)
    ok = y > 0
    skipped = t[~ok].tolist()
    t, y = t[ok], y[ok]
    var = hat_psi_cov(fof, 1, 1, t)
    value = g(y)
    half = z * np.abs(dg(y)) * np.sqrt(var)
    return DiagnosticCurve(
        name, t, np.log(t) if logx else t.copy(), value, value - half, value + half,
        xlabel="log t" if logx else "t", ylabel=ylabel, skipped=skipped,
    )
