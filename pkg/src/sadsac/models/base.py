"""Shared machinery for ESAC model families.

Every family implements ``psi(t)`` and ``signed_log_deriv(ks, t)``; the
remaining quantities follow from the identity

.. math::

    E(N_k(t)) = (-1)^{k+1} \\frac{t^k}{k!} \\psi^{(k)}(t),
    \\qquad p_k(t) = E(N_k(t)) / \\psi(t).
"""

import math

import numpy as np
from scipy.special import gammaln

from ..errors import DomainError


class EsacModel:
    """Base class for ESAC families (``psi`` is the expected SAC)."""

    family = None
    n_params = None  # free parameters, scale included (AIC)
    n_shape = None  # free shape parameters (GOF degrees of freedom)

    # -- to be provided by subclasses -------------------------------------

    def psi(self, t):
        raise NotImplementedError

    def signed_log_deriv(self, ks, t):
        """Sign and log-magnitude of ``psi^(k)(t)`` for each ``k`` in ``ks``."""
        raise NotImplementedError

    def total_rate(self):
        """``Lambda = psi'(0+)``, the expected number of individuals per unit time."""
        raise NotImplementedError

    def e_d(self):
        """Expected number of species ``E(D) = lim psi(t)`` (may be ``inf``)."""
        raise NotImplementedError

    def scaled(self, factor):
        """Same shape with every intensity multiplied by ``factor``."""
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError

    # -- generic -------------------------------------------------------------

    def log_abs_deriv(self, ks, t):
        """``log|psi^(k)(t)|`` for each ``k`` in ``ks``."""
        return self.signed_log_deriv(ks, t)[1]

    def psi_deriv(self, k, t):
        """``k``-th derivative of the ESAC at ``t > 0``.

        ``k`` may be an integer or an integer array.
        """
        ks = np.atleast_1d(np.asarray(k, dtype=np.int64))
        sign, log_abs = self.signed_log_deriv(ks, float(t))
        out = sign * np.exp(log_abs)
        return out[0] if np.ndim(k) == 0 else out

    def log_expected_counts(self, ks, t):
        ks = np.asarray(ks, dtype=np.int64)
        t = float(t)
        return self.log_abs_deriv(ks, t) + ks * math.log(t) - gammaln(ks + 1.0)

    def expected_counts(self, ks, t):
        """``E(N_k(t))`` for each ``k`` in ``ks``."""
        return np.exp(self.log_expected_counts(ks, t))

    def pk(self, k, t):
        """Species abundance distribution ``p_k(t)``; underflow returns 0."""
        ks = np.atleast_1d(np.asarray(k, dtype=np.int64))
        if np.any(ks < 1):
            raise DomainError("p_k is defined for k >= 1")
        out = np.exp(self.log_expected_counts(ks, t) - math.log(self.psi(float(t))))
        return out[0] if np.ndim(k) == 0 else out

    def xi(self, t):
        """Derivative ratio ``-psi'(t) / psi''(t)``."""
        _, la = self.signed_log_deriv(np.array([1, 2]), float(t))
        return math.exp(la[0] - la[1])

    def pgf(self, t, s):
        """Probability generating function of ``p(t)`` via ``1 - psi((1-s)t)/psi(t)``."""
        s = np.asarray(s, dtype=float)
        if np.any(s > 1):
            raise DomainError("the pgf is defined for s <= 1")
        return (1.0 - np.asarray(self.psi((1.0 - s) * t)) / self.psi(t))[()]

    def pgf_series(self, t, s, tol=1e-15, kmax=200_000, chunk=512):
        """``sum_k p_k(t) s**k`` summed directly from the SAD (``|s| < 1``)."""
        s = float(s)
        if abs(s) >= 1:
            raise DomainError("series evaluation needs |s| < 1")
        if s == 0:
            return 0.0
        total, start = 0.0, 1
        log_psi = math.log(self.psi(t))
        while start <= kmax:
            ks = np.arange(start, start + chunk)
            lp = self.log_expected_counts(ks, t) - log_psi
            terms = np.exp(lp + ks * math.log(abs(s)))
            if s < 0:
                terms = terms * np.where(ks % 2 == 1, -1.0, 1.0)
            part = terms.sum()
            total += part
            if np.abs(terms[-16:]).max(initial=0.0) < tol * max(abs(total), 1e-300):
                break
            start += chunk
        return total

    def expected_individuals(self, t):
        """``E(S(t)) = t * Lambda``."""
        return t * self.total_rate()


def model_pgf(model, t, s):
    """Probability generating function of the SAD at time ``t``, ``s <= 1``."""
    return model.pgf(t, s)


def expected_individuals(model, t):
    """Expected number of individuals recorded by ``t`` (``inf`` when ``Lambda`` is)."""
    return model.expected_individuals(t)


def good_turing_share(source, k, t0=None):
    """Expected share of individuals at ``t0`` from species seen ``k+1`` times.

    For a model this is ``(k+1) E(N_{k+1}(t0)) / E(S(t0))``, which is also the
    probability that the next individual belongs to a species currently
    represented ``k`` times. For a FoF the plug-in ``(k+1) n_{k+1} / S`` is used.

    Raises
    ------
    DomainError
        If the model's total rate is infinite (the share is then undefined).
    """
    if isinstance(source, EsacModel):
        if t0 is None:
            raise DomainError("t0 is required for a model")
        lam = source.total_rate()
        if math.isinf(lam):
            raise DomainError("infinite total rate: Good-Turing shares are undefined")
        en = source.expected_counts(np.array([k + 1]), t0)[0]
        return (k + 1) * en / (t0 * lam)
    if source.s_total == 0:
        raise DomainError("empty FoF")
    return (k + 1) * source.n(k + 1) / source.s_total
