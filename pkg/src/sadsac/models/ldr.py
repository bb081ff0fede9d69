"""Linear derivative ratio families.

LDR1 has ``xi(t) = -psi'(t)/psi''(t) = b + c t``. Integrating twice gives

.. math::

    \\psi^{(k)}(t) = (-1)^{k+1} a \\left(\\frac{b+c}{b+ct}\\right)^{1/c}
        (b+ct)^{-(k-1)} \\prod_{j=0}^{k-2} (1 + jc),

so ``a = psi'(1)``. The special cases are constant rates (``c = 0``),
geometric (``c = 1/2``), log-series (``c = 1``) and the power law (``b = 0``).
We use one log-space formula with ``log1p`` for all ``c > 0``, which stays
accurate as ``c -> 0`` and through ``c = 1``; only ``c == 0`` exactly needs
its own branch.

LDR2 adds zero-rate species: ``psi(t) = alpha t + psi_LDR1(t)``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import exprel, gammaln

from ..errors import ValidationError
from .base import EsacModel


def _log_rising(c, kmax):
    """``S[k] = sum_{j=0}^{k-2} log(1 + j c)`` for k = 0..kmax (S[0] = S[1] = 0)."""
    out = np.zeros(kmax + 1)
    if kmax >= 2:
        out[2:] = np.cumsum(np.log1p(c * np.arange(kmax - 1)))
    return out


@dataclass(frozen=True)
class Ldr1Params(EsacModel):
    """LDR1 model, ``xi(t) = b + c t``.

    Parameters
    ----------
    a : float
        Scale, ``psi'(1)``.
    b : float
        Intercept of ``xi``; ``b = 0`` gives the power law and needs ``c > 1``.
    c : float
        Slope of ``xi``. ``math.inf`` (with ``b = 0``) is the pure linear
        ESAC ``psi(t) = a t`` made of zero-rate species only.
    """

    a: float
    b: float
    c: float

    family = "ldr1"
    n_params = 3
    n_shape = 2

    def __post_init__(self):
        a, b, c = float(self.a), float(self.b), float(self.c)
        if not (a > 0 and math.isfinite(a)):
            raise ValidationError(f"LDR1 needs a > 0, got {a}")
        if not (b >= 0 and math.isfinite(b)):
            raise ValidationError(f"LDR1 needs finite b >= 0, got {b}")
        if not c >= 0:
            raise ValidationError(f"LDR1 needs c >= 0, got {c}")
        if b == 0 and not c > 1:
            raise ValidationError("LDR1 with b = 0 needs c > 1")
        if math.isinf(c) and b != 0:
            raise ValidationError("c = inf is only defined with b = 0")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def is_linear(self):
        return math.isinf(self.c)

    def psi(self, t):
        """Expected SAC at ``t >= 0`` (vectorized)."""
        a, b, c = self.a, self.b, self.c
        t = np.asarray(t, dtype=float)
        if self.is_linear:
            return (a * t)[()]
        if c == 0:
            with np.errstate(divide="ignore"):
                return (a * b * np.exp(1.0 / b + np.log(-np.expm1(-t / b)))).astype(float)[()]
        if b == 0:
            return (a * c * t ** (1.0 - 1.0 / c) / (c - 1.0))[()]
        L = np.log1p(c * t / b)
        return (a * b * np.exp(math.log1p(c / b) / c) * (L / c) * exprel((c - 1.0) * L / c))[()]

    def signed_log_deriv(self, ks, t):
        a, b, c = self.a, self.b, self.c
        ks = np.asarray(ks, dtype=np.int64)
        t = float(t)
        sign = np.where(ks % 2 == 1, 1.0, -1.0)
        if self.is_linear:
            return sign, np.where(ks == 1, math.log(a), -np.inf)
        km1 = ks - 1.0
        if c == 0:
            return sign, math.log(a) + (1.0 - t) / b - km1 * math.log(b)
        rising = _log_rising(c, int(ks.max(initial=1)))[ks]
        xi = b + c * t
        if b == 0:
            lead = -math.log(t) / c
        else:
            lead = math.log1p(c * (1.0 - t) / xi) / c
        return sign, math.log(a) + lead - km1 * math.log(xi) + rising

    def xi(self, t):
        """Exactly ``b + c t``."""
        return self.b + self.c * t

    def total_rate(self):
        a, b, c = self.a, self.b, self.c
        if self.is_linear:
            return a
        if b == 0:
            return math.inf
        if c == 0:
            return a * math.exp(1.0 / b)
        return a * math.exp(math.log1p(c / b) / c)

    def e_d(self):
        a, b, c = self.a, self.b, self.c
        if c >= 1:
            return math.inf
        if c == 0:
            return a * b * math.exp(1.0 / b)
        return a * b * math.exp(math.log1p(c / b) / c) / (1.0 - c)

    def scaled(self, factor):
        return Ldr1Params(self.a * factor, self.b, self.c)

    def intensity(self):
        """Describe the species-rate intensity (see :class:`Ldr1Intensity`)."""
        a, b, c = self.a, self.b, self.c
        if self.is_linear:
            return Ldr1Intensity("zero_rate", zero_rate_mass=a, total_mass=math.inf)
        if c == 0:
            mass = a * b * math.exp(1.0 / b)
            return Ldr1Intensity("atom", atom_location=1.0 / b, atom_mass=mass, total_mass=mass)
        shape, rate = 1.0 / c - 1.0, b / c
        log_k = math.log(a) + math.log((b + c) / c) / c - math.lgamma(1.0 / c)
        if shape > 0:
            total = math.exp(log_k + math.lgamma(shape) - shape * math.log(rate))
        else:
            total = math.inf
        return Ldr1Intensity("gamma", shape=shape, rate=rate, log_coef=log_k, total_mass=total)

    def to_dict(self):
        return {"family": self.family, "a": self.a, "b": self.b, "c": self.c}


@dataclass(frozen=True)
class Ldr1Intensity:
    """Intensity of species rates for an LDR1 model.

    ``kind`` is one of

    ``"gamma"``
        density ``exp(log_coef) * lam**(shape - 1) * exp(-rate * lam)``; the
        total mass (expected number of species) is infinite when
        ``shape <= 0`` or ``rate == 0``.
    ``"atom"``
        all species share the rate ``atom_location`` (``c = 0``).
    ``"zero_rate"``
        only zero-rate species, arriving at aggregate rate ``zero_rate_mass``.
    """

    kind: str
    shape: float = None
    rate: float = None
    log_coef: float = None
    atom_location: float = None
    atom_mass: float = None
    zero_rate_mass: float = 0.0
    total_mass: float = None

    @property
    def is_finite(self):
        return math.isfinite(self.total_mass)


@dataclass(frozen=True)
class Ldr2Params(EsacModel):
    """LDR1 plus zero-rate species arriving at rate ``zero_rate``."""

    zero_rate: float
    inner: Ldr1Params

    family = "ldr2"
    n_params = 4
    n_shape = 3

    def __post_init__(self):
        alpha = float(self.zero_rate)
        if not (alpha >= 0 and math.isfinite(alpha)):
            raise ValidationError(f"zero-rate mass must be finite and >= 0, got {alpha}")
        if not isinstance(self.inner, Ldr1Params):
            raise ValidationError("inner must be Ldr1Params")
        object.__setattr__(self, "zero_rate", alpha)

    def psi(self, t):
        return (self.zero_rate * np.asarray(t, dtype=float) + self.inner.psi(t))[()]

    def signed_log_deriv(self, ks, t):
        sign, la = self.inner.signed_log_deriv(ks, t)
        if self.zero_rate > 0:
            la = np.where(np.asarray(ks) == 1, np.logaddexp(math.log(self.zero_rate), la), la)
        return sign, la

    def total_rate(self):
        return self.zero_rate + self.inner.total_rate()

    def e_d(self):
        return math.inf if self.zero_rate > 0 else self.inner.e_d()

    def scaled(self, factor):
        return Ldr2Params(self.zero_rate * factor, self.inner.scaled(factor))

    def to_dict(self):
        return {"family": self.family, "alpha": self.zero_rate, "a": self.inner.a,
                "b": self.inner.b, "c": self.inner.c}
