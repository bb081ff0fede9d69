"""Poisson-lognormal model.

Species rates follow ``gamma * Lognormal(mu, sigma**2)``, so ``gamma`` is the
expected number of species and

.. math::

    E(N_k(t)) = \\gamma\\, \\omega_k(\\mu + \\log t, \\sigma), \\qquad
    \\omega_k(m, \\sigma) = \\int \\phi(z)\\, \\mathrm{Pois}(k; e^{m + \\sigma z})\\, dz .

For ``k >= 1`` the integrand is log-concave in ``z``; we centre a 48-node
Gauss-Hermite rule at its mode with the Laplace scale, which matches adaptive
quadrature to about 1e-10 relative and is vectorized over ``k``. ``k = 0``
has no interior mode, so ``omega_0`` and ``1 - omega_0`` use adaptive
quadrature.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln, roots_hermite

from ..errors import NumericError, ValidationError
from .base import EsacModel

_GH_X, _GH_W = roots_hermite(48)
_LOG_GH_W = np.log(_GH_W)
_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)
_ZLIM = 40.0


def _log_omega_positive(k, m, sigma):
    """``log omega_k(m, sigma)`` for ``k >= 1`` by mode-centred Gauss-Hermite."""
    k, m = np.broadcast_arrays(np.asarray(k, dtype=float), np.asarray(m, dtype=float))
    z = (np.log(np.maximum(k, 1.0)) - m) / sigma
    for _ in range(100):
        e = np.exp(m + sigma * z)
        step = (-z + k * sigma - sigma * e) / (1.0 + sigma * sigma * e)
        z = z + step
        if np.all(np.abs(step) < 1e-12 * (1.0 + np.abs(z))):
            break
    h = 1.0 + sigma * sigma * np.exp(m + sigma * z)
    scale = np.sqrt(2.0 / h)
    zz = z[..., None] + scale[..., None] * _GH_X
    lam_log = m[..., None] + sigma * zz
    lf = (-0.5 * zz ** 2 - _LOG_SQRT_2PI + k[..., None] * lam_log - np.exp(lam_log)
          - gammaln(k + 1.0)[..., None] + _GH_X ** 2 + _LOG_GH_W)
    top = lf.max(axis=-1, keepdims=True)
    return top[..., 0] + np.log(np.exp(lf - top).sum(axis=-1)) + np.log(scale)


def _quad_normal(f, m, sigma):
    """Integrate ``f(z) phi(z)`` with a breakpoint where the rate crosses 1."""
    zc = min(max(-m / sigma, -_ZLIM + 1), _ZLIM - 1)

    def g(z):
        return math.exp(-0.5 * z * z - _LOG_SQRT_2PI) * f(z)

    out = quad(g, -_ZLIM, _ZLIM, points=[zc, 0.0] if zc != 0 else [0.0],
               epsabs=0.0, epsrel=1e-12, limit=400, full_output=1)
    if len(out) > 3 and out[1] > 1e-9 * abs(out[0]) + 1e-300:
        raise NumericError(f"Poisson-lognormal quadrature failed: error {out[1]:.3g}")
    return out[0]


def log_omega_zero(m, sigma):
    """``log omega_0(m, sigma)``, the log probability of a zero count."""
    val = _quad_normal(lambda z: math.exp(-math.exp(m + sigma * z)), m, sigma)
    return math.log(val) if val > 0 else -math.inf


def log_omega_zero_complement(m, sigma):
    """``log(1 - omega_0(m, sigma))`` without cancellation."""
    val = _quad_normal(lambda z: -math.expm1(-math.exp(m + sigma * z)), m, sigma)
    return math.log(val) if val > 0 else -math.inf


def pln_log_pmf(k, mu, sigma):
    """Log Poisson-lognormal probabilities ``log omega_k(mu, sigma)``.

    Parameters
    ----------
    k : int or array_like of int
        Counts, ``k >= 0``.
    mu, sigma : float
        Location and scale of the lognormal rate distribution.
    """
    k_arr = np.asarray(k, dtype=np.int64)
    out = np.empty(k_arr.shape, dtype=float)
    pos = k_arr >= 1
    if np.any(k_arr < 0):
        raise ValidationError("counts must be >= 0")
    if pos.any():
        out[pos] = _log_omega_positive(k_arr[pos], mu, sigma)
    if (~pos).any():
        out[~pos] = log_omega_zero(float(mu), float(sigma))
    return out[()]


@dataclass(frozen=True)
class PlnParams(EsacModel):
    """Poisson-lognormal MPPP: ``gamma`` species with lognormal rates.

    Parameters
    ----------
    mu : float
        Log-rate location.
    sigma : float
        Log-rate scale, positive.
    gamma : float
        Expected number of species, positive.
    """

    mu: float
    sigma: float
    gamma: float

    family = "pln"
    n_params = 3
    n_shape = 2

    def __post_init__(self):
        mu, sigma, gamma = float(self.mu), float(self.sigma), float(self.gamma)
        if not math.isfinite(mu):
            raise ValidationError("mu must be finite")
        if not (sigma > 0 and math.isfinite(sigma)):
            raise ValidationError(f"sigma must be positive, got {sigma}")
        if not (gamma > 0 and math.isfinite(gamma)):
            raise ValidationError(f"gamma must be positive, got {gamma}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "gamma", gamma)

    def _psi_scalar(self, t):
        if t == 0:
            return 0.0
        return self.gamma * math.exp(log_omega_zero_complement(self.mu + math.log(t), self.sigma))

    def psi(self, t):
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return self._psi_scalar(float(t))
        return np.array([self._psi_scalar(float(x)) for x in t.ravel()]).reshape(t.shape)

    def signed_log_deriv(self, ks, t):
        ks = np.asarray(ks, dtype=np.int64)
        t = float(t)
        lw = _log_omega_positive(ks, self.mu + math.log(t), self.sigma)
        logs = math.log(self.gamma) + gammaln(ks + 1.0) - ks * math.log(t) + lw
        return np.where(ks % 2 == 1, 1.0, -1.0), logs

    def log_expected_counts(self, ks, t):
        ks = np.asarray(ks, dtype=np.int64)
        return math.log(self.gamma) + _log_omega_positive(ks, self.mu + math.log(float(t)), self.sigma)

    def total_rate(self):
        return self.gamma * math.exp(self.mu + 0.5 * self.sigma ** 2)

    def e_d(self):
        return self.gamma

    def scaled(self, factor):
        return PlnParams(self.mu, self.sigma, self.gamma * factor)

    def to_dict(self):
        return {"family": self.family, "mu": self.mu, "sigma": self.sigma, "gamma": self.gamma}


def pln_pmf(params, k):
    """Poisson-lognormal pmf ``omega_k(mu, sigma)`` for a :class:`PlnParams`."""
    return np.exp(pln_log_pmf(k, params.mu, params.sigma))[()]
