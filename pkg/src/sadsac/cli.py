"""Command-line interface.

Every subcommand prints one JSON object (sorted keys, ``"inf"`` for
infinity, a ``version`` field) on standard output. Exit codes: 0 on
success, 2 for invalid input, 1 for numerical failures. Randomized
subcommands require ``--seed``.
"""

import contextlib
import json
import math
import os
import sys

import click
import numpy as np

from . import __version__
from .bootstrap import BootstrapConfig, bootstrap_hill, bootstrap_richness
from .data import (
    DATASET_NAMES,
    format_fof,
    load_binned,
    load_rho,
    resolve_fof,
    save_fof,
    save_rho,
    to_jsonable,
)
from .errors import NumericError, ValidationError
from .experiments import rho_design_experiment
from .fit import loglik_fof, mle, mle_rho, pearson_gof
from .hill import hill
from .models import FAMILIES, model_from_dict
from .nonparam import diagnostic_curve, good_toulmin, rarefaction
from .richness import METHODS, extrapolate_psi, trunc_poisson_test, unseen
from .sac import SAC_FAMILIES, curvefit_baseline, mle_sac_binned, rows_to_csv, run_table
from .simulate import sim_fof, sim_mppp_window, sim_rho_from_fof

PLOTS = ("d1d2", "d2d3", "poisson", "geometric", "logseries", "powerlaw", "loglog")


# ---------------------------------------------------------------------------
# helpers


def emit(payload):
    out = dict(to_jsonable(payload))
    out["version"] = __version__
    click.echo(json.dumps(out, sort_keys=True, indent=2))


@contextlib.contextmanager
def flag(name):
    """Report validation errors raised inside the block against ``name``."""
    try:
        yield
    except (ValidationError, OSError) as exc:
        raise click.BadParameter(str(exc), param_hint=name) from exc


def _float_list(ctx, param, value):
    if value is None:
        return None
    try:
        out = [float(v) for v in value.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected a comma-separated list of numbers, got {value!r}") from None
    if not out:
        raise click.BadParameter("empty list")
    return out


def _design(ctx, param, value):
    if value is None:
        return None
    key, _, k = value.partition("=")
    if key.strip() != "rho" or not k.strip().isdigit() or int(k) < 1:
        raise click.BadParameter(f"expected rho=K with integer K >= 1, got {value!r}")
    return int(k)


def _load_fof(spec, t0):
    with flag("--fof"):
        return resolve_fof(spec, t0)


def _load_params(text):
    with flag("--params"):
        if os.path.exists(text):
            with open(text, encoding="utf-8") as fh:
                text = fh.read()
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"not valid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise ValidationError("expected a JSON object")
        d = d.get("params", d)
        return model_from_dict(d)


def _model(fof_spec, t0, family, params, seed=0):
    """A model given explicitly by ``--params`` or fitted to ``--fof``."""
    if params is not None:
        return _load_params(params), None
    if fof_spec is None:
        raise click.UsageError("give either --params or --fof")
    fof = _load_fof(fof_spec, t0)
    fit = mle(fof, family, seed=seed)
    return fit.params, fit


def _bootstrap_config(B, alpha, seed):
    with flag("--B/--alpha"):
        return BootstrapConfig(B, alpha, seed)


fof_option = click.option("--fof", "fof_spec", help=f"FoF CSV path or bundled dataset ({', '.join(DATASET_NAMES)}).")
t0_option = click.option("--t0", type=float, default=None, help="Survey end time (overrides the file).")
family_option = click.option("--family", type=click.Choice(FAMILIES), default="ldr1", show_default=True)
params_option = click.option("--params", default=None,
                             help="Model parameters as JSON (literal or file), e.g. output of 'fit'.")


def seed_option(required=True):
    return click.option("--seed", type=int, required=required, help="Master random seed.")


# ---------------------------------------------------------------------------
# commands


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="sadsac")
def cli():
    """Species accumulation and abundance analysis."""


@cli.command()
@fof_option
@t0_option
@family_option
@click.option("--design", callback=_design, default=None, help="rho=K: --fof is rho-appearance data.")
@click.option("--starts", type=int, default=8, show_default=True, help="Nelder-Mead starts.")
@seed_option(required=False)
def fit(fof_spec, t0, family, design, starts, seed):
    """Maximum-likelihood fit of a model family."""
    if fof_spec is None:
        raise click.UsageError("missing option '--fof'")
    seed = 0 if seed is None else seed
    if design is not None:
        with flag("--fof"):
            data = load_rho(fof_spec, t0)
        if data.rho != design:
            raise click.BadParameter(f"file has rho={data.rho}", param_hint="--design")
        result = mle_rho(data, family, n_starts=starts, seed=seed)
        emit({"fit": result.to_dict(), "design": {"rho": design}})
        return
    fof = _load_fof(fof_spec, t0)
    result = mle(fof, family, n_starts=starts, seed=seed)
    ll_abs = loglik_fof(result.params, fof, poisson_form=True)
    emit({
        "fit": result.to_dict(),
        "loglik_poisson": ll_abs,
        "aic_poisson": 2 * result.params.n_params - 2 * ll_abs,
        "n_plus": fof.n_plus,
    })


@cli.command()
@fof_option
@t0_option
@family_option
@params_option
def gof(fof_spec, t0, family, params):
    """Pearson chi-square goodness of fit."""
    if fof_spec is None:
        raise click.UsageError("missing option '--fof'")
    fof = _load_fof(fof_spec, t0)
    if params is not None:
        model, fit_dict = _load_params(params), None
    else:
        res = mle(fof, family)
        model, fit_dict = res.params, res.to_dict()
    g = pearson_gof(model, fof)
    emit({"gof": g.to_dict(), "fit": fit_dict, "params": model.to_dict()})


@cli.command()
@fof_option
@t0_option
@click.option("--plot", type=click.Choice(PLOTS), required=True)
@click.option("--points", type=click.IntRange(2, None), default=200, show_default=True, help="Grid size.")
@click.option("--z", type=float, default=1.96, show_default=True, help="Normal quantile for bands.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False, writable=True), default=None)
@click.option("--svg", "svg_path", type=click.Path(dir_okay=False, writable=True), default=None)
def diagnose(fof_spec, t0, plot, points, z, csv_path, svg_path):
    """Nonparametric diagnostic curve with pointwise bands."""
    from .nonparam import default_grid

    if fof_spec is None:
        raise click.UsageError("missing option '--fof'")
    fof = _load_fof(fof_spec, t0)
    grid = default_grid(fof.t0, points)
    curve = diagnostic_curve(fof, plot, grid, z)
    if csv_path:
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(curve.to_csv())
    if svg_path:
        _plot_curve(curve, svg_path)
    slope, r2 = curve.slope() if curve.t.size >= 2 else (math.nan, math.nan)
    emit({
        "plot": curve.name,
        "grid": {"points": int(grid.size), "t_min": float(grid[0]), "t_max": float(grid[-1]),
                 "reference_slope": curve.reference_slope},
        "n_points": int(curve.t.size),
        "skipped": len(curve.skipped),
        "fitted_slope": slope,
        "r_squared": r2,
        "xlabel": curve.xlabel,
        "ylabel": curve.ylabel,
        "csv": csv_path,
        "svg": svg_path,
    })


def _plot_curve(curve, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(curve.x, curve.value, color="k", lw=1.2)
    if np.isfinite(curve.lower).any():
        ax.plot(curve.x, curve.lower, color="0.5", lw=0.8, ls="--")
        ax.plot(curve.x, curve.upper, color="0.5", lw=0.8, ls="--")
    if curve.reference_slope is not None and curve.x.size:
        # parallel reference lines spanning the plotted range
        lo, hi = np.nanmin(curve.lower), np.nanmax(curve.upper)
        if not (np.isfinite(lo) and np.isfinite(hi)):
            lo, hi = curve.value.min(), curve.value.max()
        ax.set_ylim(lo, hi)
        span = curve.x[-1] - curve.x[0]
        step = max((hi - lo + span) / 8.0, 1e-12)
        for off in np.arange(lo - curve.reference_slope * curve.x[-1], hi - curve.reference_slope * curve.x[0] + step, step):
            ax.plot(curve.x, off + curve.reference_slope * curve.x, color="tab:blue", lw=0.5, ls=":")
    ax.set_xlabel(curve.xlabel)
    ax.set_ylabel(curve.ylabel)
    ax.set_title(curve.name)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


@cli.command()
@fof_option
@t0_option
@click.option("--method", type=click.Choice(METHODS + ("all",)), default="all", show_default=True)
def richness(fof_spec, t0, method):
    """Unseen-species estimates and the truncated-Poisson test."""
    if fof_spec is None:
        raise click.UsageError("missing option '--fof'")
    fof = _load_fof(fof_spec, t0)
    methods = METHODS if method == "all" else (method,)
    out = {"n_plus": fof.n_plus, "s_total": fof.s_total}
    for m in methods:
        est = unseen(fof, m)
        out[m] = est.to_dict()
        out["c_star"], out["c_f"] = est.c_hat_star, est.c_hat_f
    try:
        test = trunc_poisson_test(fof)
        out["test"] = {"T": test.T, "var_T": test.var_T, "z": test.z, "p": test.p_value}
    except ValidationError as exc:
        out["test"] = {"error": str(exc)}
    emit(out)


@cli.command("hill")
@fof_option
@t0_option
@family_option
@params_option
@click.option("--q", "qs", callback=_float_list, default="0,1,2", show_default=True)
def hill_cmd(fof_spec, t0, family, params, qs):
    """Hill numbers of a fitted or given model."""
    model, fit_res = _model(fof_spec, t0, family, params)
    with flag("--q"):
        values = {repr(q): hill(model, q) for q in qs}
    emit({"hill": values, "params": model.to_dict(),
          "fit": fit_res.to_dict() if fit_res else None})


def _target(ctx, param, value):
    name, _, qs = value.partition(":")
    if name in ("e_star", "unseen") and not qs:
        return name, None
    if name == "hill":
        return name, _float_list(ctx, param, qs) if qs else None
    raise click.BadParameter(f"expected e_star, unseen, hill or hill:Q1,Q2,..., got {value!r}")


@cli.command()
@fof_option
@t0_option
@click.option("--target", callback=_target, default="e_star", show_default=True,
              help="e_star (richness total), unseen, or hill[:q-list].")
@family_option
@click.option("--q", "qs", callback=_float_list, default="0,1,2", show_default=True,
              help="Hill orders when --target hill has no list.")
@click.option("--B", "B", type=int, default=2999, show_default=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@seed_option()
def bootstrap(fof_spec, t0, target, family, qs, B, alpha, seed):
    """Parametric bootstrap intervals (infinite estimates allowed)."""
    if fof_spec is None:
        raise click.UsageError("missing option '--fof'")
    fof = _load_fof(fof_spec, t0)
    config = _bootstrap_config(B, alpha, seed)
    name, target_qs = target
    meta = {"B": B, "alpha": alpha, "seed": seed, "target": name}
    if name in ("e_star", "unseen"):
        with flag("--fof"):
            est = bootstrap_richness(fof, config, add_observed=(name == "e_star"))
        emit({**meta, "interval": est.to_dict()})
        return
    fit_res = mle(fof, family)
    with flag("--q"):
        res = bootstrap_hill(fit_res, target_qs or qs, config)
    emit({**meta, "intervals": {repr(q): v.to_dict() for q, v in res.items()}, "fit": fit_res.to_dict()})


@cli.command()
@fof_option
@t0_option
@family_option
@params_option
@click.option("--design", callback=_design, default=None,
              help="rho=K: emit rho-appearance data instead of a FoF.")
@click.option("--realization", is_flag=True, help="Simulate the full MPPP and include it in the JSON.")
@click.option("--thin-observed", is_flag=True,
              help="With --design, thin the observed --fof instead of simulating from a model.")
@click.option("--replicates", type=click.IntRange(1, None), default=None,
              help="With --thin-observed, refit --family on this many thinned replicates and summarize.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False, writable=True), default=None)
@seed_option()
def simulate(fof_spec, t0, family, params, design, realization, thin_observed, replicates, csv_path, seed):
    """Simulate a FoF, an MPPP realization or rho-appearance data."""
    rng = np.random.default_rng(seed)
    if thin_observed:
        if design is None or fof_spec is None:
            raise click.UsageError("--thin-observed needs --design rho=K and --fof")
        fof = _load_fof(fof_spec, t0)
        if replicates:
            summary = rho_design_experiment(fof, (design,), replicates, seed, family)[0]
            emit({"rho_experiment": summary.to_dict(), "family": family, "seed": seed})
            return
        data = sim_rho_from_fof(fof, design, rng)
        if csv_path:
            save_rho(data, csv_path)
        emit({"rho": design, "n_plus": data.n_plus, "low_counts": list(data.low_counts),
              "times": data.times, "csv": csv_path, "seed": seed})
        return

    model, fit_res = _model(fof_spec, t0, family, params)
    t_end = t0 if t0 is not None else (fit_res.t0 if fit_res else 1.0)
    out = {"params": model.to_dict(), "t0": t_end, "seed": seed}
    if realization or design is not None:
        real = sim_mppp_window(model, t_end, rng)
        fof = real.fof()
        if realization:
            out["realization"] = real.to_dict()
        if design is not None:
            data = real.rho_data(design)
            if csv_path:
                save_rho(data, csv_path)
            out.update({"rho": design, "low_counts": list(data.low_counts),
                        "n_times": int(data.times.size), "csv": csv_path})
            emit(out)
            return
    else:
        fof = sim_fof(model, t_end, rng)
    if csv_path:
        save_fof(fof, csv_path)
    out.update({"fof": {str(k): v for k, v in fof.counts.items()}, "n_plus": fof.n_plus,
                "s_total": fof.s_total, "csv": csv_path})
    emit(out)


@cli.command()
@fof_option
@t0_option
@click.option("--t", "ts", callback=_float_list, required=True, help="Target times.")
@click.option("--method", type=click.Choice(("modified_first_order", "zeroth_order", "good_toulmin", "model")),
              default="modified_first_order", show_default=True)
@family_option
def extrapolate(fof_spec, t0, ts, method, family):
    """Expected SAC at other times (interpolation below t0, extrapolation above)."""
    if fof_spec is None:
        raise click.UsageError("missing option '--fof'")
    fof = _load_fof(fof_spec, t0)
    model = mle(fof, family).params if method == "model" else None
    values = {}
    with flag("--t"):
        for t in ts:
            if model is not None:
                v = float(model.psi(t))
            elif t <= fof.t0:
                v = float(rarefaction(fof, t))
            elif method == "good_toulmin":
                v = float(good_toulmin(fof, t))
            else:
                v = extrapolate_psi(fof, t, method)
            values[repr(t)] = v
    emit({"psi": values, "method": method, "t0": fof.t0,
          "params": model.to_dict() if model is not None else None})


@cli.command()
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Binned SAC CSV (t,cum_species).")
@click.option("--family", type=click.Choice(SAC_FAMILIES), default="power", show_default=True)
@click.option("--method", type=click.Choice(("mle", "curvefit")), default="mle", show_default=True)
@click.option("--t", "ts", callback=_float_list, default=None, help="Times at which to report psi.")
def sacfit(input_path, family, method, ts):
    """Fit an ESAC shape to a binned species accumulation curve."""
    with flag("--input"):
        binned = load_binned(input_path)
    with flag("--family"):
        res = mle_sac_binned(binned, family) if method == "mle" else curvefit_baseline(binned, family)
    out = {"method": method, "result": res.to_dict()}
    if ts:
        out["psi"] = {repr(t): float(res.psi(t)) for t in ts}
    emit(out)


@cli.command()
@click.option("--table", type=click.Choice(("B", "C", "D")), required=True)
@click.option("--replicates", type=click.IntRange(1, None), default=500, show_default=True)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False, writable=True), default=None)
@seed_option()
def sacexp(table, replicates, csv_path, seed):
    """RMSRE grid of MLE versus regression extrapolation; CSV on stdout unless --csv."""
    rows = run_table(table, replicates, seed)
    text = rows_to_csv(rows)
    if csv_path:
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(text)
        emit({"table": table, "rows": [r.to_dict() for r in rows], "csv": csv_path, "seed": seed})
    else:
        click.echo(text, nl=False)


# ---------------------------------------------------------------------------
# entry point


def main(argv=None):
    """Run the CLI and return the exit code."""
    try:
        cli.main(args=argv, prog_name="sadsac", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.Abort:
        return 1
    except ValidationError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except (NumericError, ArithmeticError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        return 1
    return 0


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
