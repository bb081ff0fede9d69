"""Rational derivative ratio family (RDR1).

.. math::

    \\xi(t) = \\frac{1}{c_1/(t+b_1) + c_2/(t+b_2)}, \\qquad
    \\psi'(t) = a \\left(\\frac{t_0+b_1}{t+b_1}\\right)^{c_1}
                 \\left(\\frac{t_0+b_2}{t+b_2}\\right)^{c_2}.

The scale is anchored at the survey end, ``a = psi'(t0)``. The ESAC itself
has no elementary closed form and is integrated numerically; derivatives of
order two and higher come from the three-term recurrence

.. math::

    k(k-1+c_1+c_2)\\psi^{(k)} + [c_1 t + b_2 c_1 + c_2 t + b_1 c_2 + k(2t+b_1+b_2)]
    \\psi^{(k+1)} + (t+b_1)(t+b_2)\\psi^{(k+2)} = 0,

run on rescaled values so that neither overflow nor underflow occurs.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from ..errors import NumericError, ValidationError
from .base import EsacModel
from .ldr import Ldr1Params

QUAD_EPSREL = 1e-10
QUAD_EPSABS = 1e-14
QUAD_TOL = 1e-9


def _checked_quad(f, lo, hi, **kwargs):
    """``scipy.integrate.quad`` that raises when the error estimate misses ``QUAD_TOL``."""
    out = quad(f, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200, full_output=1, **kwargs)
    val, err = out[0], out[1]
    if not math.isfinite(val) or err > QUAD_TOL * abs(val) + QUAD_EPSABS:
        if len(out) > 3 or not math.isfinite(val):
            raise NumericError(
                f"quadrature did not converge: estimate {val:.6g}, error {err:.3g}"
            )
    return val


@dataclass(frozen=True)
class Rdr1Params(EsacModel):
    """RDR1 model anchored at ``t0``.

    Parameters
    ----------
    a : float
        ``psi'(t0)``, positive.
    b1, b2 : float
        Pole offsets with ``0 <= b1 < b2``.
    c1 : float
        Positive; ``c1 < 1`` is required when ``b1 = 0``.
    c2 : float
        Nonnegative; ``c2 = 0`` reduces to LDR1 (see :meth:`reduce_to_ldr1`).
    t0 : float
        Anchor time, normally the survey end.
    """

    a: float
    b1: float
    b2: float
    c1: float
    c2: float
    t0: float = 1.0

    family = "rdr1"
    n_params = 5
    n_shape = 4

    def __post_init__(self):
        vals = [float(getattr(self, f)) for f in ("a", "b1", "b2", "c1", "c2", "t0")]
        a, b1, b2, c1, c2, t0 = vals
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError("RDR1 parameters must be finite")
        if not a > 0:
            raise ValidationError(f"RDR1 needs a > 0, got {a}")
        if not (0 <= b1 < b2):
            raise ValidationError(f"RDR1 needs 0 <= b1 < b2, got b1={b1}, b2={b2}")
        if not (c1 > 0 and c2 >= 0):
            raise ValidationError(f"RDR1 needs c1 > 0 and c2 >= 0, got c1={c1}, c2={c2}")
        if b1 == 0 and not c1 < 1:
            raise ValidationError("RDR1 with b1 = 0 needs c1 < 1")
        if not t0 > 0:
            raise ValidationError("t0 must be positive")
        for name, v in zip(("a", "b1", "b2", "c1", "c2", "t0"), vals):
            object.__setattr__(self, name, v)

    # -- first derivative and ESAC ---------------------------------------

    def log_dpsi(self, x):
        """``log psi'(x)`` (scalar, ``x >= 0``)."""
        a, b1, b2, c1, c2, t0 = self.a, self.b1, self.b2, self.c1, self.c2, self.t0
        val = math.log(a) + c1 * math.log((t0 + b1) / (x + b1))
        if c2:
            val += c2 * math.log((t0 + b2) / (x + b2))
        return val

    def _psi_scalar(self, t):
        if t == 0:
            return 0.0
        a, b1, b2, c1, c2, t0 = self.a, self.b1, self.b2, self.c1, self.c2, self.t0
        if b1 > 0:
            la = math.log(a)
            lt1, lt2 = math.log(t0 + b1), math.log(t0 + b2)
            exp, log = math.exp, math.log

            def f(x):
                return exp(la + c1 * (lt1 - log(x + b1)) + c2 * (lt2 - log(x + b2)))

            return sum(_checked_quad(f, lo, hi) for lo, hi in self._pieces(t))
        # integrable x**-c1 singularity at the origin: algebraic-weight rule
        lead = math.log(a) + c1 * math.log(t0)

        def g(x):
            return math.exp(lead + c2 * math.log((t0 + b2) / (x + b2)))

        (lo, hi), *rest = self._pieces(t)
        head = _checked_quad(g, lo, hi, weight="alg", wvar=(-c1, 0.0))
        return head + sum(_checked_quad(lambda x: x ** -c1 * g(x), u, v) for u, v in rest)

    def _pieces(self, t):
        # one piece covering the poles, then geometric pieces so quad sees the far tail
        edge = min(t, 10.0 * max(self.b2, self.t0))
        pieces = [(0.0, edge)]
        while edge < t:
            nxt = min(t, 100.0 * edge)
            pieces.append((edge, nxt))
            edge = nxt
        return pieces

    def psi(self, t):
        """Expected SAC, by adaptive quadrature of ``psi'`` over ``[0, t]``."""
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return self._psi_scalar(float(t))
        return np.array([self._psi_scalar(float(x)) for x in t.ravel()]).reshape(t.shape)

    # -- higher derivatives -------------------------------------------------

    def xi(self, t):
        return 1.0 / (self.c1 / (t + self.b1) + self.c2 / (t + self.b2))

    def signed_log_deriv(self, ks, t):
        """Sign and ``log|psi^(k)(t)|`` from the three-term recurrence.

        The signs are produced by the recurrence itself, not imposed.
        """
        ks = np.asarray(ks, dtype=np.int64)
        t = float(t)
        kmax = int(ks.max(initial=1))
        signs = np.empty(kmax + 1)
        logs = np.empty(kmax + 1)
        signs[1], logs[1] = 1.0, self.log_dpsi(t)
        if kmax >= 2:
            b1, b2, c1, c2 = self.b1, self.b2, self.c1, self.c2
            cc = c1 + c2
            p = (t + b1) * (t + b2)
            base_b = c1 * t + b2 * c1 + c2 * t + b1 * c2
            # x = psi^(k) e^-s, y = psi^(k+1) e^-s with common log scale s
            s = logs[1]
            x, y = 1.0, -1.0 / self.xi(t)
            signs[2], logs[2] = -1.0, s + math.log(-y)
            for k in range(1, kmax - 1):
                z = -(k * (k - 1 + cc) * x + (base_b + k * (2 * t + b1 + b2)) * y) / p
                m = abs(z)
                if m == 0 or not math.isfinite(m):
                    signs[k + 2:], logs[k + 2:] = 0.0, -np.inf
                    break
                signs[k + 2] = math.copysign(1.0, z)
                s += math.log(m)
                logs[k + 2] = s
                x, y = y / m, z / m
        return signs[ks], logs[ks]

    # -- summaries -------------------------------------------------------------

    def total_rate(self):
        if self.b1 == 0:
            return math.inf
        return math.exp(self.log_dpsi(0.0))

    def e_d(self):
        """``E(D)``; finite iff ``c1 + c2 > 1``."""
        if self.c1 + self.c2 <= 1:
            return math.inf
        tail = _checked_quad(lambda x: math.exp(self.log_dpsi(x)), self.t0, math.inf)
        return self._psi_scalar(self.t0) + tail

    def scaled(self, factor):
        return Rdr1Params(self.a * factor, self.b1, self.b2, self.c1, self.c2, self.t0)

    def reduce_to_ldr1(self):
        """The identical LDR1 model when ``c2 == 0`` (``b = b1/c1``, ``c = 1/c1``)."""
        if self.c2 != 0:
            raise ValidationError("only RDR1 with c2 = 0 reduces to LDR1")
        return Ldr1Params(math.exp(self.log_dpsi(1.0)), self.b1 / self.c1, 1.0 / self.c1)

    def to_dict(self):
        return {"family": self.family, "a": self.a, "b1": self.b1, "b2": self.b2,
                "c1": self.c1, "c2": self.c2, "t0": self.t0}
