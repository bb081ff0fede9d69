"""Replicated experiments built from the core modules."""

from dataclasses import dataclass, field

import numpy as np

from .data import to_jsonable
from .fit import mle_rho
from .simulate import sim_rho_from_fof


@dataclass
class RhoDesignSummary:
    """Mean and sample sd of fitted parameters over replicates for one ``rho``."""

    rho: int
    replicates: int
    mean: dict
    sd: dict
    estimates: list = field(repr=False, default_factory=list)

    def to_dict(self):
        return to_jsonable({"rho": self.rho, "replicates": self.replicates,
                            "mean": self.mean, "sd": self.sd})


def rho_design_experiment(fof, rhos=(1, 4), replicates=20, seed=0, family="pln"):
    """Information loss of the rho-appearance design.

    For each ``rho`` the observed FoF is turned into rho-appearance data
    ``replicates`` times (species seen ``m >= rho`` times get a
    ``Beta(rho, m + 1 - rho)`` appearance time) and the model is refitted by
    :func:`~sadsac.fit.mle_rho`. Replicate ``i`` of each ``rho`` uses its
    own substream of ``seed``.

    Returns
    -------
    list of RhoDesignSummary
    """
    out = []
    streams = np.random.SeedSequence(seed).spawn(len(rhos))
    for rho, stream in zip(rhos, streams):
        rows = []
        for sub in stream.spawn(replicates):
            data = sim_rho_from_fof(fof, rho, np.random.default_rng(sub))
            rows.append(mle_rho(data, family).params.to_dict())
        keys = [k for k in rows[0] if k != "family"]
        values = {k: np.array([float(r[k]) for r in rows]) for k in keys}
        out.append(RhoDesignSummary(
            rho, replicates,
            {k: float(v.mean()) for k, v in values.items()},
            {k: float(v.std(ddof=1)) if v.size > 1 else 0.0 for k, v in values.items()},
            rows,
        ))
    return out
