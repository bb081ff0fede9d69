"""Seeded simulation of species records.

Two independent routes are provided.

* :func:`sim_mppp_window` simulates the recorded species themselves. Their
  number is Poisson with mean ``psi(t0)``; each rate is drawn from the
  recorded-species law ``(1 - exp(-lambda t0)) nu~(d lambda) / psi(t0)`` and
  each appearance pattern from a Poisson process conditioned on at least one
  point.
* :func:`sim_fof` draws ``N_+ ~ Poisson(psi(t0))`` frequencies directly from
  the model SAD ``p_k(t0)`` by inverse CDF.

For the gamma-type families (LDR1, LDR2, RDR1) the recorded-species rate is
drawn as a mixture over the first-appearance time ``u``, whose density is
``psi'(u) / psi(t0)`` on ``[0, t0]``. Given ``u`` the rate is a gamma (or a
sum of two gammas), so no envelope for the possibly infinite ``nu~`` is
needed.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import exprel

from .data import FrequencyOfFrequencies, RhoAppearanceData, to_jsonable
from .errors import NumericError, ValidationError
from .models import Ldr1Params, Ldr2Params, PlnParams, Rdr1Params

PMF_TAIL = 1e-12
PMF_KMAX = 200_000
MAX_APPEARANCES = 50_000_000


def _rng(seed):
    if seed is None:
        raise ValidationError("a seed is required for simulation")
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class AtomicIntensity:
    """Finite species intensity with atoms: ``masses[i]`` expected species at ``rates[i]``.

    ``zero_rate`` is the aggregate rate of zero-rate species (each seen once).
    """

    rates: tuple
    masses: tuple
    zero_rate: float = 0.0

    def __post_init__(self):
        rates = np.asarray(self.rates, dtype=float)
        masses = np.asarray(self.masses, dtype=float)
        if rates.shape != masses.shape or rates.ndim != 1:
            raise ValidationError("rates and masses must be 1-d and of equal length")
        if np.any(~np.isfinite(rates)) or np.any(rates <= 0):
            raise ValidationError("atom rates must be positive and finite")
        if np.any(~np.isfinite(masses)) or np.any(masses < 0):
            raise ValidationError("atom masses must be nonnegative and finite")
        if not (self.zero_rate >= 0 and math.isfinite(self.zero_rate)):
            raise ValidationError("zero_rate must be nonnegative and finite")
        object.__setattr__(self, "rates", tuple(rates.tolist()))
        object.__setattr__(self, "masses", tuple(masses.tolist()))

    def psi(self, t):
        r, m = np.asarray(self.rates), np.asarray(self.masses)
        return float(self.zero_rate * t - (m * np.expm1(-r * t)).sum())


@dataclass
class MpppRealization:
    """Recorded species of one simulated window ``[0, t0]``.

    Attributes
    ----------
    rates : ndarray
        Rate of each recorded species (0 for zero-rate species).
    times : list of ndarray
        Sorted appearance times of each species, all in ``[0, t0]``.
    t0 : float
    zero_rate_mass : float
        Aggregate rate of zero-rate species used in the simulation.
    """

    rates: np.ndarray
    times: list
    t0: float
    zero_rate_mass: float = 0.0
    counts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.counts = np.array([len(x) for x in self.times], dtype=np.int64)

    @property
    def n_species(self):
        return len(self.times)

    def fof(self):
        """Frequency of frequencies at ``t0``."""
        ks, nk = np.unique(self.counts, return_counts=True)
        return FrequencyOfFrequencies(dict(zip(ks.tolist(), nk.tolist())), self.t0)

    def first_times(self):
        """Sorted first-appearance times (the empirical SAC jump points)."""
        return np.sort(np.array([x[0] for x in self.times])) if self.times else np.empty(0)

    def sac(self, t):
        """Number of species recorded by each time in ``t``."""
        return np.searchsorted(self.first_times(), np.asarray(t, dtype=float), side="right")

    def rho_data(self, rho):
        """Record only the first ``rho`` appearances of each species."""
        low = [int((self.counts == j).sum()) for j in range(1, rho)]
        times = [x[rho - 1] for x in self.times if len(x) >= rho]
        return RhoAppearanceData(rho, self.t0, low, np.array(times))

    def to_dict(self):
        return to_jsonable({
            "t0": self.t0,
            "zero_rate_mass": self.zero_rate_mass,
            "species": [{"rate": r, "times": x} for r, x in zip(self.rates, self.times)],
        })


# ---------------------------------------------------------------------------
# building blocks


def zero_truncated_poisson(mean, rng):
    """Draws from Poisson(``mean``) conditioned on being positive (exact, vectorized).

    The first point of a unit-rate process on ``[0, mean]`` is a truncated
    exponential; the remaining points are Poisson on what is left.
    """
    mean = np.asarray(mean, dtype=float)
    v = rng.random(mean.shape)
    first = -np.log1p(v * np.expm1(-mean))
    return 1 + rng.poisson(np.maximum(mean - first, 0.0))


def _appearance_times(counts, t0, rng):
    return [np.sort(rng.random(k)) * t0 for k in counts]


def _first_time_power(v, t0, b1, c1):
    """Invert the distribution with density proportional to ``(u + b1)^-c1`` on ``[0, t0]``."""
    if b1 == 0:
        return t0 * v ** (1.0 / (1.0 - c1))
    k = 1.0 - c1
    log_w0 = math.log1p(t0 / b1)
    total = log_w0 * float(exprel(k * log_w0))
    y = v * total
    log_w = y if k == 0 else np.log1p(k * y) / k
    return b1 * np.expm1(log_w)


def _gamma_mixture_rates(n, t0, b1, c1, b2, c2, rng):
    """Rates of ``n`` recorded species for ``psi'(u)`` proportional to ``(u+b1)^-c1 (u+b2)^-c2``.

    ``u`` is drawn from the ``(u + b1)^-c1`` factor and accepted with
    probability ``(b2 / (u + b2))^c2``; then the rate is
    ``Gamma(c1, u + b1) + Gamma(c2, u + b2)``.
    """
    u = np.empty(0)
    while u.size < n:
        m = max(2 * (n - u.size), 16)
        cand = _first_time_power(rng.random(m), t0, b1, c1)
        if c2 > 0:
            keep = rng.random(m) < np.exp(-c2 * np.log1p(cand / b2))
            cand = cand[keep]
        u = np.concatenate([u, cand])
    u = u[:n]
    lam = rng.gamma(c1, 1.0, n) / (u + b1)
    if c2 > 0:
        lam = lam + rng.gamma(c2, 1.0, n) / (u + b2)
    return lam


def _recorded_rates(model, n, t0, rng):
    """Rates of ``n`` recorded species (excluding zero-rate species)."""
    if isinstance(model, Ldr1Params):
        if model.c == 0:
            return np.full(n, 1.0 / model.b)
        return _gamma_mixture_rates(n, t0, model.b / model.c, 1.0 / model.c, 1.0, 0.0, rng)
    if isinstance(model, Rdr1Params):
        return _gamma_mixture_rates(n, t0, model.b1, model.c1, model.b2, model.c2, rng)
    if isinstance(model, PlnParams):
        out = np.empty(0)
        while out.size < n:
            m = max(2 * (n - out.size), 16)
            lam = np.exp(model.mu + model.sigma * rng.standard_normal(m))
            out = np.concatenate([out, lam[rng.random(m) < -np.expm1(-lam * t0)]])
        return out[:n]
    if isinstance(model, AtomicIntensity):
        r, m = np.asarray(model.rates), np.asarray(model.masses)
        w = -m * np.expm1(-r * t0)
        return r[rng.choice(r.size, size=n, p=w / w.sum())] if n else np.empty(0)
    raise ValidationError(f"cannot simulate from {type(model).__name__}")


def _split_zero_rate(model):
    """(positive-rate part or None, zero-rate aggregate)."""
    if isinstance(model, Ldr2Params):
        return model.inner, model.zero_rate
    if isinstance(model, Ldr1Params) and model.is_linear:
        return None, model.a
    if isinstance(model, AtomicIntensity):
        return (model if model.rates else None), model.zero_rate
    return model, 0.0


def sim_mppp_window(nu_spec, t0, seed):
    """Simulate the recorded species of an MPPP on ``[0, t0]``.

    Parameters
    ----------
    nu_spec : EsacModel or AtomicIntensity
        Species-rate intensity: a fitted model, or a finite set of atoms.
    t0 : float
        Window end.
    seed : int, SeedSequence or Generator

    Returns
    -------
    MpppRealization
        Species with positive rates come first, in simulation order; every
        zero-rate species has exactly one appearance, uniform on ``[0, t0]``.
    """
    rng = _rng(seed)
    if not t0 > 0:
        raise ValidationError("t0 must be positive")
    positive, alpha = _split_zero_rate(nu_spec)
    rates, times = np.empty(0), []
    if positive is not None:
        n = rng.poisson(_psi_positive(positive, t0))
        rates = _recorded_rates(positive, n, t0, rng)
        counts = zero_truncated_poisson(rates * t0, rng)
        if counts.sum() > MAX_APPEARANCES:
            raise NumericError(
                f"{float(counts.sum()):.3g} appearances exceed the cap of {MAX_APPEARANCES:.0e}; "
                "use sim_fof or sim_first_times for heavy-tailed rate laws"
            )
        times = _appearance_times(counts, t0, rng)
    n0 = rng.poisson(alpha * t0) if alpha > 0 else 0
    rates = np.concatenate([rates, np.zeros(n0)])
    times = times + [np.array([x]) for x in rng.random(n0) * t0]
    return MpppRealization(rates, times, float(t0), float(alpha))


def _psi_positive(model, t0):
    return float(model.psi(t0))


# ---------------------------------------------------------------------------
# FoF sampling from the SAD


def sad_table(model, t0, tail=PMF_TAIL, kmax=PMF_KMAX):
    """``p_k(t0)`` for ``k = 1..K`` with ``K`` the first index where the CDF reaches ``1 - tail``.

    ``K`` is capped at ``kmax``; the remaining tail mass is ``1 - sum(p)``.
    Tables are cached per model (parameter records are immutable).
    """
    return _sad_table(model, float(t0), tail, kmax)


@lru_cache(maxsize=64)
def _sad_table(model, t0, tail, kmax):
    p = _build_sad_table(model, t0, tail, kmax)
    p.setflags(write=False)
    return p


def _build_sad_table(model, t0, tail, kmax):
    k = 64
    while True:
        k = min(k, kmax)
        p = model.pk(np.arange(1, k + 1), t0)
        cdf = np.cumsum(p)
        hit = np.nonzero(cdf >= 1.0 - tail)[0]
        if hit.size:
            return p[: hit[0] + 1]
        if k >= kmax:
            return p
        k *= 4


def sim_fof(model, t0, seed):
    """Simulate a FoF: ``N_+ ~ Poisson(psi(t0))`` frequencies iid from ``p(t0)``.

    Frequencies are drawn by inverse CDF on the tabulated SAD. When the table
    is cut at ``PMF_KMAX`` with mass left over (very heavy tails), draws that
    land in the tail are completed by rejection from the rate mixture,
    keeping only counts beyond the table.
    """
    rng = _rng(seed)
    n = rng.poisson(float(model.psi(t0)))
    if n == 0:
        return FrequencyOfFrequencies({}, t0)
    p = sad_table(model, t0)
    cdf = np.cumsum(p)
    u = rng.random(n)
    ks = np.searchsorted(cdf, u * cdf[-1] if cdf[-1] >= 1.0 - PMF_TAIL else u, side="right") + 1
    over = ks > p.size
    if over.any():
        ks[over] = _tail_counts(model, t0, int(over.sum()), p.size, rng)
    vals, cnt = np.unique(ks, return_counts=True)
    return FrequencyOfFrequencies(dict(zip(vals.tolist(), cnt.tolist())), t0)


def _tail_counts(model, t0, n, kmin, rng):
    positive, _ = _split_zero_rate(model)
    out = []
    while len(out) < n:
        lam = _recorded_rates(positive, 4096, t0, rng)
        c = zero_truncated_poisson(lam * t0, rng)
        out.extend(c[c > kmin].tolist())
    return np.array(out[:n])


def sim_rho_from_fof(fof, rho, seed):
    """Thin a FoF to the ``rho``-appearance design.

    A species seen ``m >= rho`` times has its ``rho``-th appearance at the
    ``rho``-th of ``m`` uniform order statistics, i.e. ``t0 * Beta(rho, m + 1 - rho)``.
    """
    if int(rho) != rho or rho < 1:
        raise ValidationError(f"rho must be an integer >= 1, got {rho}")
    rho = int(rho)
    rng = _rng(seed)
    low = [fof.n(j) for j in range(1, rho)]
    m = np.repeat(fof.ks[fof.ks >= rho], fof.nk[fof.ks >= rho])
    times = rng.beta(rho, m + 1 - rho) * fof.t0 if m.size else np.empty(0)
    return RhoAppearanceData(rho, fof.t0, low, np.maximum(times, np.nextafter(0.0, 1.0)))


def sim_binned_sac(model, breakpoints, seed):
    """Cumulative species counts at ``breakpoints`` (Poisson increments of ``psi``)."""
    from .data import BinnedSac

    rng = _rng(seed)
    ell = np.asarray(breakpoints, dtype=float)
    edges = np.concatenate([[0.0], ell])
    mean = np.diff(np.asarray(model.psi(edges), dtype=float))
    return BinnedSac(ell, np.cumsum(rng.poisson(np.maximum(mean, 0.0))))


def sim_first_times(model, t0, seed, iterations=60):
    """First-appearance times of the species recorded by ``t0``.

    The count is Poisson with mean ``psi(t0)`` and, given the count, the
    times are iid with CDF ``psi(t) / psi(t0)``, drawn by bisection on the
    inverse. Only the SAC is simulated, so heavy-tailed rate laws (where
    individual species may be seen astronomically often) stay cheap.
    """
    rng = _rng(seed)
    total = float(model.psi(t0))
    n = rng.poisson(total)
    target = rng.random(n) * total
    lo, hi = np.zeros(n), np.full(n, float(t0))
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        below = np.asarray(model.psi(mid), dtype=float) < target
        lo, hi = np.where(below, mid, lo), np.where(below, hi, mid)
    return np.sort(np.maximum(hi, np.nextafter(0.0, 1.0)))
