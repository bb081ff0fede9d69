"""Parametric ESAC families: LDR1, LDR2, RDR1 and Poisson-lognormal."""

from ..data import from_extended
from ..errors import ValidationError
from .base import EsacModel, expected_individuals, good_turing_share, model_pgf
from .ldr import Ldr1Intensity, Ldr1Params, Ldr2Params
from .pln import PlnParams, pln_log_pmf, pln_pmf
from .rdr import Rdr1Params

FAMILIES = ("ldr1", "ldr2", "rdr1", "pln")

__all__ = [
    "EsacModel",
    "FAMILIES",
    "Ldr1Intensity",
    "Ldr1Params",
    "Ldr2Params",
    "PlnParams",
    "Rdr1Params",
    "expected_individuals",
    "good_turing_share",
    "model_from_dict",
    "model_pgf",
    "pln_log_pmf",
    "pln_pmf",
]


def model_from_dict(d):
    """Rebuild a parameter record from its ``to_dict`` form (``"inf"`` accepted)."""
    d = dict(d)
    family = d.pop("family", None)
    g = {k: from_extended(v) for k, v in d.items()}
    try:
        if family == "ldr1":
            return Ldr1Params(g["a"], g["b"], g["c"])
        if family == "ldr2":
            return Ldr2Params(g["alpha"], Ldr1Params(g["a"], g["b"], g["c"]))
        if family == "rdr1":
            return Rdr1Params(g["a"], g["b1"], g["b2"], g["c1"], g["c2"], g.get("t0", 1.0))
        if family == "pln":
            return PlnParams(g["mu"], g["sigma"], g["gamma"])
    except KeyError as exc:
        raise ValidationError(f"missing {family} parameter {exc.args[0]!r}") from None
    raise ValidationError(f"unknown model family {family!r}")
