"""Command-line front end: deterministic experiments with CSV/JSON artifacts.

All randomness flows from one --seed; sub-seeds derive from fixed labels, so
a run with an identical configuration produces byte-identical output files.
A flat key=value config file supplies defaults that explicit flags override.
Exit codes: 2 for configuration errors, 3 for precondition failures inside a
module, and for verify-all 0/1 for pass/fail.
"""

from __future__ import annotations

import json
import math
import os
import sys
import warnings

import click
import numpy as np

from . import acceptance, covering, dimension, fn_core, occupation

PRECONDITION_EXIT = 3


def _fail_precondition(exc: Exception):
    click.echo(f"error: {exc}", err=True)
    sys.exit(PRECONDITION_EXIT)


def _read_config(path: str | None) -> dict:
    if path is None:
        return {}
    values = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise click.UsageError(
                        f"{path}:{lineno}: expected key=value, got {line!r}"
                    )
                key, value = line.split("=", 1)
                values[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise click.UsageError(f"cannot read config {path}: {exc}") from exc
    return values


def _merge_config(ctx: click.Context, config: str | None, **kwargs) -> dict:
    """Config-file values override defaults; explicit flags override both."""
    file_values = _read_config(config)
    merged = {}
    for name, value in kwargs.items():
        source = ctx.get_parameter_source(name)
        if name in file_values and source != click.core.ParameterSource.COMMANDLINE:
            param = next(p for p in ctx.command.params if p.name == name)
            merged[name] = param.type.convert(file_values[name], param, ctx)
        else:
            merged[name] = value
    unknown = set(file_values) - set(kwargs)
    if unknown:
        raise click.UsageError(f"unknown config keys: {sorted(unknown)}")
    return merged


def _build_spec(a: float, b: float, b_seq: str | None, phases: str | None,
                g: str) -> fn_core.FunctionSpec:
    phase_tuple = tuple(float(v) for v in phases.split(",")) if phases else ()
    base = fn_core.base_function(g)
    if b_seq:
        seq = tuple(float(v) for v in b_seq.split(","))
        freq = fn_core.explicit(seq, b)
    else:
        freq = fn_core.geometric(b)
    return fn_core.build_spec(a, freq, phases=phase_tuple, g=base)


def _thread_count(threads: int | None) -> int:
    if threads is not None:
        return max(1, threads)
    env = os.environ.get("WLAB_THREADS")
    return max(1, int(env)) if env else 1


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def spec_options(fn):
    fn = click.option("--g", default="cos", show_default=True,
                      type=click.Choice(sorted(fn_core.BUILTIN_BASE_FUNCTIONS)),
                      help="Built-in base function.")(fn)
    fn = click.option("--phases", default=None,
                      help="Comma-separated phase offsets (default all 0).")(fn)
    fn = click.option("--b-seq", default=None,
                      help="Explicit comma-separated frequency sequence (b0 must be 1).")(fn)
    fn = click.option("--b", default=2.0, show_default=True,
                      help="Frequency ratio (or ratio lower bound with --b-seq).")(fn)
    fn = click.option("--a", default=0.8, show_default=True,
                      help="Amplitude base in (0, 1).")(fn)
    return fn


def common_options(fn):
    fn = click.option("--threads", type=int, default=None,
                      help="Worker cap (default: WLAB_THREADS or 1).")(fn)
    fn = click.option("--config", type=click.Path(), default=None,
                      help="key=value file of defaults for this command.")(fn)
    fn = click.option("--seed", default=7, show_default=True, help="Master seed.")(fn)
    return fn


@click.group()
@click.version_option(version="0.1.0", prog_name="wlab")
def main():
    """Random high-frequency series: graphs, covers, energies, occupation."""


@main.command()
@spec_options
@common_options
@click.option("--points", default=4096, show_default=True, help="Samples on [0, 1].")
@click.option("--tol", type=float, default=None, help="Truncation tolerance.")
@click.option("--output", default="sample.csv", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
@click.pass_context
def gen(ctx, **kwargs):
    """Sample one random draw of f on a uniform grid."""
    p = _merge_config(ctx, kwargs.pop("config"), **kwargs)
    try:
        spec = _build_spec(p["a"], p["b"], p["b_seq"], p["phases"], p["g"])
        tol = p["tol"] if p["tol"] is not None else fn_core.default_tolerance(spec)
        order = fn_core.truncation_order(spec, tol)
        if spec.freq.max_order is not None:
            order = min(order, spec.freq.max_order)
        draw = fn_core.draw_coefficients(spec, p["seed"], max(order, 1))
        sample = fn_core.sample_graph(spec, draw, p["points"], tol)
    except (ValueError, TypeError) as exc:
        _fail_precondition(exc)
    if p["fmt"] == "csv":
        sample.write_csv(p["output"])
    else:
        _write_json(p["output"], sample.to_json_dict(spec=spec, seed=p["seed"]))
    click.echo(f"wrote {p['output']} ({p['points']} points, order {sample.truncation_order})")


@main.command()
@spec_options
@common_options
@click.option("--seeds", default=8, show_default=True, help="Number of draws averaged.")
@click.option("--min-scale-exp", default=6, show_default=True,
              help="Coarsest scale 2^-k.")
@click.option("--max-scale-exp", default=12, show_default=True,
              help="Finest scale 2^-k.")
@click.option("--m", type=int, default=None, help="Samples (default: from finest scale).")
@click.option("--output", default="boxdim.json", show_default=True)
@click.pass_context
def boxdim(ctx, **kwargs):
    """Box-counting dimension of graph(f) against the predicted value."""
    p = _merge_config(ctx, kwargs.pop("config"), **kwargs)
    try:
        spec = _build_spec(p["a"], p["b"], p["b_seq"], p["phases"], p["g"])
        scales = [2.0 ** -k for k in range(p["min_scale_exp"], p["max_scale_exp"] + 1)]
        est = dimension.box_dimension_scan(
            spec,
            seeds=[p["seed"] + i for i in range(p["seeds"])],
            scales=scales,
            m=p["m"],
            threads=_thread_count(p["threads"]),
        )
    except (ValueError, TypeError) as exc:
        _fail_precondition(exc)
    payload = {"schema": "wlab.boxdim/1", "spec": spec.to_dict(),
               "seed": p["seed"], "seeds": p["seeds"]}
    payload.update(est.to_json_dict())
    _write_json(p["output"], payload)
    csv_path = os.path.splitext(p["output"])[0] + ".csv"
    est.write_counts_csv(csv_path)
    click.echo(f"slope {est.slope:.4f} vs predicted {est.predicted_d:.4f}; "
               f"wrote {p['output']} and {csv_path}")


@main.command()
@spec_options
@common_options
@click.option("--t-grid", default="1.2,1.4,1.6,1.9", show_default=True,
              help="Comma-separated exponents in (1, 2).")
@click.option("--pairs", default=400_000, show_default=True)
@click.option("--seeds", default=6, show_default=True)
@click.option("--output", default="energy.csv", show_default=True)
@click.pass_context
def energy(ctx, **kwargs):
    """Monte Carlo t-energy scan with stability verdicts."""
    p = _merge_config(ctx, kwargs.pop("config"), **kwargs)
    try:
        spec = _build_spec(p["a"], p["b"], p["b_seq"], p["phases"], p["g"])
        t_grid = [float(v) for v in p["t_grid"].split(",")]
        entries = dimension.energy_threshold_scan(
            spec, t_grid, p["pairs"],
            seeds=[p["seed"] + i for i in range(p["seeds"])],
        )
    except (ValueError, TypeError) as exc:
        _fail_precondition(exc)
    dimension.write_scan_csv(p["output"], entries)
    for e in entries:
        click.echo(f"t={e.t}: value={e.value:.4f} se={e.std_error:.4f} -> {e.verdict}")
    click.echo(f"wrote {p['output']}")


@main.command()
@spec_options
@common_options
@click.option("--samples", default=10 ** 6, show_default=True)
@click.option("--bins", default=256, show_default=True)
@click.option("--decay-target", default=1e-4, show_default=True,
              help="Grow u_max until the last octave of |mu|^2 dips below this.")
@click.option("--output", default="density.csv", show_default=True)
@click.pass_context
def occ(ctx, **kwargs):
    """Occupation density, its L2 norm, and the Parseval cross-check."""
    p = _merge_config(ctx, kwargs.pop("config"), **kwargs)
    try:
        spec = _build_spec(p["a"], p["b"], p["b_seq"], p["phases"], p["g"])
        tol = fn_core.default_tolerance(spec)
        order = fn_core.truncation_order(spec, tol)
        if spec.freq.max_order is not None:
            order = min(order, spec.freq.max_order)
        draw = fn_core.draw_coefficients(spec, p["seed"], max(order, 1))
        sample = fn_core.sample_graph(spec, draw, p["samples"], tol)
        dens = occupation.occupation_histogram(sample, p["bins"])
        du = 0.9 * math.pi / (dens.hi - dens.lo)
        profile, reached = occupation.adaptive_char_profile(
            sample, du=du, decay_target=p["decay_target"])
        report = occupation.parseval_check(dens, profile, float(profile.us[-1]))
    except (ValueError, TypeError) as exc:
        _fail_precondition(exc)
    dens.write_csv(p["output"])
    base = os.path.splitext(p["output"])[0]
    _write_json(base + "_parseval.json", {
        "schema": "wlab.parseval/1",
        "spec": spec.to_dict(),
        "seed": p["seed"],
        "decay_target_reached": reached,
        **report.to_json_dict(),
    })
    click.echo(f"l2_sq={dens.l2_sq:.5f} parseval_discrepancy={report.discrepancy:.4f}; "
               f"wrote {p['output']} and {base}_parseval.json")


@main.command()
@spec_options
@common_options
@click.option("--epsilon", default=0.05, show_default=True)
@click.option("--n-max", default=6, show_default=True)
@click.option("--resolution", default=2048, show_default=True)
@click.option("--pbm/--no-pbm", default=False, show_default=True,
              help="Also write PBM bitmaps of each intersection level.")
@click.option("--output", default="cover.csv", show_default=True)
@click.pass_context
def cover(ctx, **kwargs):
    """Near-level set of g, its iterated intersections, and their decay."""
    p = _merge_config(ctx, kwargs.pop("config"), **kwargs)
    try:
        spec = _build_spec(p["a"], p["b"], p["b_seq"], p["phases"], p["g"])
        a_set = covering.near_level_set(spec.g, p["epsilon"], p["resolution"])
        sets, measures, n_eff = covering.intersection_sequence(a_set, spec, p["n_max"])
        fit = covering.decay_fit(measures)
    except (ValueError, TypeError) as exc:
        _fail_precondition(exc)
    covering.write_measures_csv(p["output"], measures)
    if p["pbm"]:
        base = os.path.splitext(p["output"])[0]
        for n, s in enumerate(sets):
            s.write_pbm(f"{base}_level{n}.pbm")
    click.echo(f"levels 0..{n_eff}: rate={fit.rate:.4f} r2={fit.r2:.4f}; "
               f"wrote {p['output']}")


@main.command(name="verify-all")
@click.option("--profile", default="desk", show_default=True,
              type=click.Choice(sorted(acceptance.PROFILES)))
@click.option("--criteria", default=None,
              help="Comma-separated subset, e.g. 1,4,10 (default: all).")
@click.option("--report", default=None, type=click.Path(),
              help="Also write a JSON report here.")
def verify_all(profile, criteria, report):
    """Run the acceptance criteria; exit 0 iff every one passes."""
    prof = acceptance.PROFILES[profile]
    selected = None
    if criteria:
        try:
            selected = [int(v) for v in criteria.split(",")]
            unknown = set(selected) - set(acceptance.CRITERIA)
            if unknown:
                raise ValueError(f"unknown criteria {sorted(unknown)}")
        except ValueError as exc:
            raise click.UsageError(str(exc)) from exc
    results = acceptance.run_all(prof, selected)
    for r in results:
        click.echo(r.line())
    if report:
        _write_json(report, {
            "schema": "wlab.verify/1",
            "profile": profile,
            "passed": all(r.passed for r in results),
            "criteria": [r.to_json_dict() for r in results],
        })
    sys.exit(0 if all(r.passed for r in results) else 1)


if __name__ == "__main__":
    main()
