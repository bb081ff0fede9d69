"""Species abundance and accumulation analysis with mixed Poisson partition processes.

Submodules
----------
data        observation containers and CSV input/output
nonparam    nonparametric derivative estimates and diagnostic curves
models      parametric ESAC families (LDR1, LDR2, RDR1, Poisson-lognormal)
fit         maximum likelihood and goodness of fit
richness    rare-species richness estimators and SAC extrapolation
hill        Hill numbers
bootstrap   parametric bootstrap intervals with infinite estimates
simulate    simulation of MPPP windows, FoFs and designs
sac         inference from the empirical SAC alone
"""

__version__ = "0.1.0"
