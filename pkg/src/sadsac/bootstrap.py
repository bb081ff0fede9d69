"""Parametric bootstrap intervals that tolerate infinite estimates.

Replicate estimates are sorted and padded with ``theta_(0) = 0`` and
``theta_(B+1) = inf``. The interval is the narrowest
``[theta_(j), theta_((B+1)(1-alpha)+j)]`` over ``0 <= j <= (B+1) alpha``,
which needs no arithmetic on the (possibly infinite) point estimate.

Each replicate draws from its own generator spawned from the master seed
by replicate index, so results do not depend on execution order or on the
number of worker threads (``SADSAC_THREADS``).
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import to_jsonable
from .errors import InsufficientDataError, SadsacError, ValidationError
from .fit import mle
from .hill import hill
from .nonparam import expected_fof_interp, rarefaction
from .richness import unseen, unseen_from_counts
from .simulate import sim_fof

# refits start at the original MLE; these tolerances keep loglik within ~1e-7
REFIT_TOL = (1e-4, 1e-6)


@dataclass(frozen=True)
class BootstrapConfig:
    """Replicate count ``B``, level ``alpha`` and master ``seed``.

    ``alpha (B + 1) / 2`` must be an integer and ``B >= 19``.
    """

    B: int = 2999
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if int(self.B) != self.B or self.B < 19:
            raise ValidationError(f"B must be an integer >= 19, got {self.B}")
        if not 0 < self.alpha < 1:
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")
        half = self.alpha * (self.B + 1) / 2
        if abs(half - round(half)) > 1e-9 or round(half) < 1:
            raise ValidationError(f"alpha (B + 1) / 2 must be a positive integer, got {half:g}")
        if self.seed is None or int(self.seed) != self.seed:
            raise ValidationError("seed must be an integer")

    @property
    def n_low(self):
        """``(B + 1) alpha``, the largest admissible start index."""
        return int(round(self.alpha * (self.B + 1)))


@dataclass(frozen=True)
class IntervalEstimate:
    point: float
    lower: float
    upper: float

    def to_dict(self):
        return to_jsonable({"point": self.point, "lower": self.lower, "upper": self.upper})


def _extended_width(lo, hi):
    return 0.0 if lo == hi else hi - lo


def _interval_key(lo, hi):
    # infinite widths compare by inclusion: [x, inf] is narrower for larger x
    w = _extended_width(lo, hi)
    return (w, -lo if math.isinf(w) else 0.0)


def smallest_interval(replicates, alpha):
    """Narrowest order-statistic interval; ties go to the smallest start index.

    Widths are extended reals (``[inf, inf]`` has width 0). Among intervals
    of infinite width the one with the largest lower end is narrowest, since
    it is contained in the others.

    Parameters
    ----------
    replicates : array_like
        ``B`` estimates, ``inf`` allowed (NaN is treated as ``inf``).
    alpha : float

    Returns
    -------
    (lower, upper)

    Examples
    --------
    >>> smallest_interval([5.0] * 39, 0.05)
    (5.0, 5.0)
    """
    theta = np.asarray(replicates, dtype=float)
    theta = np.sort(np.where(np.isnan(theta), math.inf, theta))
    b = theta.size
    padded = np.concatenate([[0.0], theta, [math.inf]])
    n_low = int(round(alpha * (b + 1)))
    offset = int(round((b + 1) * (1 - alpha)))
    best = None
    for j in range(n_low + 1):
        lo, hi = padded[j], padded[offset + j]
        key = _interval_key(lo, hi)
        if best is None or key < best[0]:
            best = (key, float(lo), float(hi))
    return best[1], best[2]


def replicate_generators(seed, B):
    """Independent generators, one per replicate index."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(int(seed)).spawn(B)]


def _threads():
    try:
        return max(1, int(os.environ.get("SADSAC_THREADS", "1")))
    except ValueError:
        return 1


def run_replicates(generator, estimator, config):
    """Evaluate ``estimator(generator(rng_i))`` for each replicate ``i``.

    A failing estimator records ``inf`` for that replicate instead of
    aborting. The estimator may return a scalar or a 1-d array.
    """
    rngs = replicate_generators(config.seed, config.B)

    def one(rng):
        try:
            return np.asarray(estimator(generator(rng)), dtype=float)
        except (SadsacError, ArithmeticError, ValueError):
            return None

    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            raw = list(pool.map(one, rngs))
    else:
        raw = [one(rng) for rng in rngs]
    shape = next((r.shape for r in raw if r is not None), ())
    return np.stack([np.full(shape, math.inf) if r is None else r for r in raw])


def bootstrap_ci(generator, estimator, config, point=math.nan):
    """Parametric bootstrap interval for a scalar statistic.

    Parameters
    ----------
    generator : callable
        ``generator(rng)`` returns one bootstrap sample.
    estimator : callable
        Maps a sample to an estimate (``inf`` allowed).
    config : BootstrapConfig
    point : float, optional
        Point estimate reported alongside the interval.
    """
    reps = run_replicates(generator, estimator, config)
    lo, hi = smallest_interval(reps, config.alpha)
    return IntervalEstimate(float(point), lo, hi)


# ---------------------------------------------------------------------------
# samplers


def model_fof_sampler(fit, seed):
    """One FoF from the fitted model: Poisson ``N_+`` then iid frequencies from the SAD."""
    model = fit.params if hasattr(fit, "params") else fit
    return sim_fof(model, fit.t0 if hasattr(fit, "t0") else 1.0, seed)


@dataclass(frozen=True)
class RareCountsPlan:
    """Poisson means for ``(N1, N2, N3)`` and the observed-species total to add back.

    ``t`` is the (possibly shifted) time the means refer to and ``base`` the
    estimate of ``psi(t)``.
    """

    means: tuple
    t: float
    base: float
    shifted: bool


def rare_counts_plan(fof):
    """Poisson means for the richness bootstrap.

    If one of ``n_1, n_2, n_3`` is zero while some ``n_j > 0`` with
    ``j >= 3``, the survey end is moved back to ``t = t0 - t0 / S`` and the
    interpolated expected counts at ``t`` are used, so that no count is
    stuck at zero; the observed total becomes the rarefaction estimate of
    ``psi(t)``.
    """
    if fof.n_plus == 0:
        raise InsufficientDataError("no species observed; the richness bootstrap is degenerate")
    counts = tuple(float(fof.n(i)) for i in (1, 2, 3))
    if min(counts) > 0 or fof.max_k < 3:
        return RareCountsPlan(counts, fof.t0, float(fof.n_plus), False)
    t = fof.t0 - fof.t0 / fof.s_total
    means = tuple(float(expected_fof_interp(fof, i, t)) for i in (1, 2, 3))
    return RareCountsPlan(means, t, float(rarefaction(fof, t)), True)


def rare_counts_sampler(fof, seed):
    """One draw of ``(N1*, N2*, N3*)``, independent Poisson around :func:`rare_counts_plan` means."""
    rng = np.random.default_rng(seed)
    return rng.poisson(rare_counts_plan(fof).means)


# ---------------------------------------------------------------------------
# targets


def bootstrap_richness(fof, config, add_observed=True):
    """Interval for ``E(N_0)`` (or, with ``add_observed``, for ``E(D)``) from ``E*``.

    The point estimate is always computed from the original data.
    """
    plan = rare_counts_plan(fof)
    est = unseen(fof, "e_star")

    def gen(rng):
        return rng.poisson(plan.means)

    def stat(c):
        return unseen_from_counts(int(c[0]), int(c[1]), int(c[2]), "e_star").unseen

    reps = run_replicates(gen, stat, config)
    lo, hi = smallest_interval(reps, config.alpha)
    if add_observed:
        return IntervalEstimate(est.total, plan.base + lo, plan.base + hi)
    return IntervalEstimate(est.unseen, lo, hi)


def bootstrap_hill(fit, qs, config, refit_tol=REFIT_TOL):
    """Intervals for Hill numbers of several orders from one set of refits.

    Each replicate simulates a FoF from the fitted model and refits the same
    family by Nelder-Mead started at the original estimate.

    Returns
    -------
    dict
        Maps each ``q`` to an :class:`IntervalEstimate`.
    """
    qs = [float(q) for q in qs]
    t0 = fit.t0

    def gen(rng):
        return sim_fof(fit.params, t0, rng)

    def stat(f):
        if f.n_plus == 0:
            return [0.0] * len(qs)
        refit = mle(f, fit.family, start=fit.params, tol=refit_tol)
        return [hill(refit.params, q) for q in qs]

    reps = run_replicates(gen, stat, config)
    out = {}
    for i, q in enumerate(qs):
        lo, hi = smallest_interval(reps[:, i], config.alpha)
        out[q] = IntervalEstimate(hill(fit.params, q), lo, hi)
    return out
