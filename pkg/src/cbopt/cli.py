"""Command-line harness for single runs and the experiment drivers.

Subcommands: ``test1-saa``, ``test1-mf``, ``test2``, ``test3``, ``test4``
and ``run``.  Every flag can also be given in a plain key-value
configuration file (``--config``); explicit flags override file values,
which override the per-subcommand defaults.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .approximation import (
    draw_saa_sample,
    midpoint_nodes,
    quadrature_objective,
    saa_objective,
    truncated_normal_grid,
)
from .dynamics import CboParams, DiffusionKind, run_cbo
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    ReportRow,
    emit_csv,
    test1_meanfield_rate,
    test1_saa_rate,
    test2_joint_rate,
    test3_dimension_sweep,
    test4_success_rates,
)
from .objectives import UniformBox, get_objective
from .seeds import RunSeed

_PAPER_M_GRID = ",".join(str(m) for m in list(range(100, 10001, 500)) + [10000])

_GLOBAL_DEFAULTS = {
    "objective": "ackley-like", "pipeline": "saa",
    "n": "5000", "m": "100,316,1000,3162,10000", "q": "100",
    "n_ref": "10000", "samples_cbo": "10", "samples_y": "50",
    "seed": "0", "dt": "0.1", "t_final": "10", "lam": "1.0",
    "sigma": "0.5", "alpha": "40", "diffusion": "iso", "batch_size": "",
    "trunc_half_width": "20.0", "paper_scale": "false", "quick": "false",
    "workers": "", "out": "", "config": "",
}

_COMMAND_DEFAULTS = {
    "test1-saa": {},
    "test1-mf": {"n": "100,316,1000,3162,10000", "m": "100"},
    "test2": {"n": "100,316,1000,3162,10000"},
    "test3": {"n": "64,256,1024", "n_ref": "1000", "dt": "1", "t_final": "7"},
    "test4": {"n": "100,1000", "samples_cbo": "100", "samples_y": "100",
              "diffusion": "aniso"},
    "run": {"n": "200", "pipeline": "exact", "m": "1000", "q": "1000"},
}

_PAPER_SCALE_OVERRIDES = {
    "test1-saa": {"samples_y": "200", "m": _PAPER_M_GRID},
    "test1-mf": {"samples_y": "200", "n_ref": "100000", "n": _PAPER_M_GRID},
    "test2": {"n_ref": "100000", "n": _PAPER_M_GRID},
    "test3": {"n": "50,100,200,500,1000"},
    "test4": {"n": "100,500,1000"},
    "run": {},
}

_DIFFUSION = {"iso": DiffusionKind.ISOTROPIC, "aniso": DiffusionKind.ANISOTROPIC}


def _int_grid(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in str(text).split(",") if str(part).strip())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"cannot parse boolean value {text!r}")


def load_config_file(path: str) -> dict[str, str]:
    """Parse a plain ``key = value`` (or ``key: value``) configuration file.

    Keys match the long flag names; ``#`` starts a comment.
    """
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            for sep in ("=", ":"):
                if sep in line:
                    key, _, val = line.partition(sep)
                    break
            else:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key = key.strip().lower().replace("-", "_")
            if key == "lambda":
                key = "lam"
            values[key] = val.strip()
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cbopt",
        description="Consensus-based particle optimization: single runs and rate/success studies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    help_by_cmd = {
        "test1-saa": "sample-size convergence rate of the sampled pipeline",
        "test1-mf": "large-ensemble (Wasserstein) convergence rate at fixed sample size",
        "test2": "joint-limit rate of the quadrature pipeline (nodes = particles)",
        "test3": "quadrature rate across random-space dimensions k = 1, 2, 3",
        "test4": "success-rate tables for both pipelines on the utility objectives",
        "run": "one seeded particle run on a chosen objective and pipeline",
    }
    for command, help_text in help_by_cmd.items():
        p = sub.add_parser(command, help=help_text)
        p.add_argument("--objective", help="catalog objective identifier")
        p.add_argument("--pipeline", choices=("exact", "saa", "quadrature"))
        p.add_argument("--n", help="particle count or comma-separated grid")
        p.add_argument("--m", help="sample size or comma-separated grid")
        p.add_argument("--q", help="quadrature nodes per axis (run subcommand)")
        p.add_argument("--n-ref", dest="n_ref", help="reference ensemble size")
        p.add_argument("--samples-cbo", dest="samples_cbo", help="algorithm replications")
        p.add_argument("--samples-y", dest="samples_y", help="random-vector replications")
        p.add_argument("--seed", help="master seed")
        p.add_argument("--dt", help="time step")
        p.add_argument("--t-final", dest="t_final", help="time horizon")
        p.add_argument("--lambda", dest="lam", help="drift coefficient")
        p.add_argument("--sigma", help="diffusion coefficient")
        p.add_argument("--alpha", help="consensus sharpness")
        p.add_argument("--diffusion", choices=("iso", "aniso"))
        p.add_argument("--batch-size", dest="batch_size", help="consensus mini-batch size")
        p.add_argument("--trunc-half-width", dest="trunc_half_width",
                       help="half-width of the truncated normal quadrature box")
        p.add_argument("--paper-scale", dest="paper_scale", action="store_true", default=None,
                       help="use the full-size replication counts and grids")
        p.add_argument("--quick", action="store_true", default=None,
                       help="reduced outer replications (test4)")
        p.add_argument("--workers", help="process count for replications")
        p.add_argument("--out", help="CSV output path")
        p.add_argument("--config", help="key-value configuration file")
    return parser


def _resolve(args: argparse.Namespace) -> dict[str, str]:
    """Merge CLI flags, config file and defaults (in that precedence)."""
    settings = dict(_GLOBAL_DEFAULTS)
    settings.update(_COMMAND_DEFAULTS[args.command])
    config_path = args.config or settings.get("config")
    file_values = load_config_file(config_path) if config_path else {}
    unknown = set(file_values) - set(_GLOBAL_DEFAULTS)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    settings.update(file_values)
    for key in _GLOBAL_DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    if _bool(settings["paper_scale"]):
        for key, value in _PAPER_SCALE_OVERRIDES[args.command].items():
            if getattr(args, key, None) is None and key not in file_values:
                settings[key] = value
    return settings


def _experiment_config(settings: dict[str, str]) -> ExperimentConfig:
    cbo = CboParams.from_horizon(
        t_final=float(settings["t_final"]),
        dt=float(settings["dt"]),
        lam=float(settings["lam"]),
        sigma=float(settings["sigma"]),
        alpha=float(settings["alpha"]),
        diffusion=_DIFFUSION[settings["diffusion"]],
        batch_size=int(settings["batch_size"]) if settings["batch_size"] else None,
    )
    return ExperimentConfig(
        objective=settings["objective"],
        pipeline=settings["pipeline"],
        cbo=cbo,
        n_grid=_int_grid(settings["n"]),
        approx_grid=_int_grid(settings["m"]),
        n_ref=int(settings["n_ref"]),
        n_samples_cbo=int(settings["samples_cbo"]),
        n_samples_y=int(settings["samples_y"]),
        master_seed=int(settings["seed"]),
        out=settings["out"] or None,
        trunc_half_width=float(settings["trunc_half_width"]),
        workers=int(settings["workers"]) if settings["workers"] else None,
        quick=_bool(settings["quick"]),
    )


def _print_report(report: ExperimentReport) -> None:
    for label, fit in report.fits.items():
        print(f"slope[{label}] = {fit.slope:+.4f} (intercept {fit.intercept:+.4f})")
    for (pipeline, k, n, thr), rate in report.success.items():
        print(f"success[{pipeline} k={k} N={n} thr={thr}] = {rate:.2f}")


def _run_single(settings: dict[str, str]) -> ExperimentReport:
    obj = get_objective(settings["objective"])
    cfg = _experiment_config(settings)
    n = cfg.n_grid[0]
    pipeline = settings["pipeline"]
    if pipeline == "exact":
        objective = obj.f
    elif pipeline == "saa":
        sample = draw_saa_sample(obj.law, cfg.approx_grid[0], RunSeed(cfg.master_seed))
        objective = saa_objective(obj, sample)
    else:
        q = int(settings["q"])
        if isinstance(obj.law, UniformBox):
            grid = midpoint_nodes(obj.law.lo, obj.law.hi, q, obj.law.k)
        else:
            grid = truncated_normal_grid(obj.law.k, q, cfg.trunc_half_width)
        objective = quadrature_objective(obj, grid)
    cfg.cbo.check_well_posed(obj.dim)
    traj = run_cbo(objective, cfg.cbo, cfg.init, n, obj.dim, RunSeed(cfg.master_seed))

    final = traj.final_consensus
    value = float(np.asarray(objective(final[None, :])).ravel()[0])
    print(f"final consensus: {np.array2string(final, precision=6)}")
    print(f"{pipeline} objective at consensus: {value:.6f}")
    label, series = "objective", np.array([
        float(np.asarray(objective(c[None, :])).ravel()[0]) for c in traj.consensus])
    if obj.minimizer is not None:
        label = "dist-to-min"
        series = np.max(np.abs(traj.consensus - obj.minimizer[None, :]), axis=1)
        print(f"max-norm distance to reference minimizer: {series[-1]:.6f}")
    report = ExperimentReport(rows=[
        ReportRow(experiment="run", objective=obj.name, pipeline=pipeline,
                  t=float(t), scale_name="N", scale_value=float(n),
                  p_or_thr=label, error_mean=float(v))
        for t, v in zip(traj.times, series)
    ])
    if cfg.out:
        emit_csv(report, cfg.out)
    return report


_DRIVERS = {
    "test1-saa": test1_saa_rate,
    "test1-mf": test1_meanfield_rate,
    "test2": test2_joint_rate,
    "test3": test3_dimension_sweep,
    "test4": test4_success_rates,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = _resolve(args)
        if args.command == "run":
            _run_single(settings)
        else:
            report = _DRIVERS[args.command](_experiment_config(settings))
            _print_report(report)
            if settings["out"]:
                print(f"wrote {settings['out']}")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
