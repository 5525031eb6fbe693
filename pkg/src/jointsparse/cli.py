"""Command-line entry point.

Subcommands mirror the experiment drivers (deblur, success, phase, mri) plus
a generic solve on user-supplied CSV matrices. All outputs land under
--outdir: delimited tables, matrices, and a manifest.json. With --figures the
companion plotkit package (if installed) renders default figures next to the
CSVs.

Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 validation error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    InvalidHyperParameter,
    JointSparseError,
    NonPositiveTheta,
    NotApplicable,
    NotPositiveDefinite,
    ValidationError,
    ZeroTruth,
)
from .experiments import (
    IMAGING_GSBL,
    IMAGING_IAS,
    SIGNAL_GSBL,
    SIGNAL_IAS,
    DeblurConfig,
    MriConfig,
    PhaseConfig,
    SuccessConfig,
    make_hyper,
    run_deblurring,
    run_parallel_mri,
    run_phase_transition,
    run_success_analysis,
)
from .inference import run
from .model import MMVProblem, SolverConfig
from .operators import (
    DenseMap,
    load_matrix_csv,
    save_matrix_csv,
    whiten_problem,
)
from .reports import write_report, write_table_csv
from .uq import conditional_posterior, credible_intervals, sample_posterior

_VALIDATION_ERRORS = (
    DimensionMismatch,
    InvalidHyperParameter,
    NonPositiveTheta,
    NotPositiveDefinite,
    IndexOutOfRange,
    ZeroTruth,
    NotApplicable,
    ValidationError,
)


def _comma_ints(text):
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _comma_strs(text):
    return [v for v in text.split(",") if v]


def _add_solver_flags(p):
    p.add_argument("--tol", type=float, default=1e-4,
                   help="relative signal-change convergence tolerance")
    p.add_argument("--max-outer", type=int, default=200,
                   help="outer iteration budget")
    p.add_argument("--inner-solver", choices=("auto", "direct", "pcg"),
                   default="auto", help="weighted least-squares backend")


def _add_hyper_flags(p, ias_defaults, gsbl_defaults):
    r, beta, vt_ias = ias_defaults
    _, vt_gsbl = gsbl_defaults
    p.add_argument("--r", type=float, default=r,
                   help="shape exponent of the variance-form hyper-prior")
    p.add_argument("--beta", type=float, default=beta,
                   help="rate parameter of the hyper-prior")
    p.add_argument("--vartheta", type=float, default=None,
                   help="scale parameter override applied to every algorithm")
    p.add_argument("--vartheta-ias", type=float, default=vt_ias,
                   help="scale parameter for ias/mmv-ias")
    p.add_argument("--vartheta-gsbl", type=float, default=vt_gsbl,
                   help="scale parameter for gsbl/mmv-gsbl")


def _params_from_args(args):
    vt_ias = args.vartheta if args.vartheta is not None else args.vartheta_ias
    vt_gsbl = args.vartheta if args.vartheta is not None else args.vartheta_gsbl
    return (args.r, args.beta, vt_ias), (args.beta, vt_gsbl)


def _solver_from_args(args):
    return SolverConfig(
        inner_solver=args.inner_solver,
        convergence_tol=args.tol,
        outer_maxit=args.max_outer,
    )


# Default figure sets rendered by --figures, per experiment kind. Each entry:
# (figure kind, input CSV names or glob, output name).
_FIGURES = {
    "deblur": [
        ("signal-overlay", ["signals.csv"], "signals.png"),
        ("theta-profile", ["thetas.csv"], "thetas.png"),
        ("ci-ribbon", ["credible_intervals.csv"], "credible_intervals.png"),
    ],
    "success": [
        ("error-curve", ["success.csv"], "error_curve.png"),
        ("esp-curve", ["success.csv"], "esp_curve.png"),
    ],
    "mri": [
        ("error-curve", ["mri_errors.csv"], "error_curve.png"),
        ("image-grid", "image_*.csv", "images.png"),
    ],
}


def _render_figures(kind, outdir, grid_names=()):
    try:
        from plotkit.figures import render
    except ImportError:
        print("plotkit is not installed; skipping figure rendering", file=sys.stderr)
        return
    jobs = list(_FIGURES.get(kind, []))
    for name in grid_names:
        jobs.append(("phase-heatmap", [f"{name}.csv"], f"{name}.png"))
    outdir = Path(outdir)
    for fig_kind, inputs, outname in jobs:
        if isinstance(inputs, str):
            paths = sorted(outdir.glob(inputs))
        else:
            paths = [outdir / i for i in inputs]
        render(fig_kind, paths, outdir / outname)


def cmd_deblur(args):
    ias_params, gsbl_params = _params_from_args(args)
    cfg = DeblurConfig(
        n=args.n, L=args.L, sigma2=args.sigma2, seed=args.seed,
        algorithms=tuple(args.algs),
        ias_params=ias_params, gsbl_params=gsbl_params,
        solver=_solver_from_args(args),
        uq_samples=args.samples, uq_level=args.level,
    )
    report = run_deblurring(cfg)
    write_report(report, args.outdir)
    if args.figures:
        _render_figures("deblur", args.outdir)
    return 0


def cmd_success(args):
    ias_params, gsbl_params = _params_from_args(args)
    M_values = args.M if args.M else list(range(10, args.N + 1, 10))
    cfg = SuccessConfig(
        N=args.N, s=args.s, T=args.T, sigma2=args.sigma2, eps_tol=args.eps_tol,
        L_values=tuple(args.L), M_values=tuple(M_values),
        algorithms=tuple(args.algs), seed=args.seed, jobs=args.jobs,
        ias_params=ias_params, gsbl_params=gsbl_params,
        solver=_solver_from_args(args),
    )
    report = run_success_analysis(cfg)
    write_report(report, args.outdir)
    if args.figures:
        _render_figures("success", args.outdir)
    return 0


def cmd_phase(args):
    ias_params, gsbl_params = _params_from_args(args)
    cfg = PhaseConfig(
        N=args.N, stride=args.stride, T=args.T, L=args.L,
        algorithm=args.algorithm, sigma2=args.sigma2, eps_tol=args.eps_tol,
        seed=args.seed, jobs=args.jobs,
        ias_params=ias_params, gsbl_params=gsbl_params,
        solver=_solver_from_args(args),
    )
    report = run_phase_transition(cfg)
    write_report(report, args.outdir)
    if args.figures:
        _render_figures("phase", args.outdir, grid_names=report.grids)
    return 0


def cmd_mri(args):
    ias_params, gsbl_params = _params_from_args(args)
    cfg = MriConfig(
        n=256 if args.full_scale else args.n,
        lines_values=tuple(args.lines), n_coils=args.L,
        sigma2=args.sigma2, seed=args.seed,
        algorithms=tuple(args.algs),
        ias_params=ias_params, gsbl_params=gsbl_params,
        solver=_solver_from_args(args),
    )
    report = run_parallel_mri(cfg)
    write_report(report, args.outdir)
    if args.figures:
        _render_figures("mri", args.outdir)
    return 0


def cmd_solve(args):
    if len(args.forward) != len(args.data):
        raise ValidationError(
            f"got {len(args.forward)} forward matrices but {len(args.data)} "
            "measurement files"
        )
    forward_ops = [DenseMap(load_matrix_csv(p)) for p in args.forward]
    measurements = [load_matrix_csv(p).ravel() for p in args.data]
    sparsifier = DenseMap(load_matrix_csv(args.sparsifier))
    noise_cov = None
    if args.noise_cov:
        C = load_matrix_csv(args.noise_cov)
        noise_cov = [C] * len(forward_ops)
    problem = MMVProblem(forward_ops, measurements, sparsifier, noise_cov=noise_cov)
    white = whiten_problem(problem)
    ias_params, gsbl_params = _params_from_args(args)
    hyper = make_hyper(args.algorithm, ias_params, gsbl_params)
    res = run(white, hyper, cfg=_solver_from_args(args))

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for l, x in enumerate(res.x_hat):
        save_matrix_csv(outdir / f"x_hat_{l}.csv", np.reshape(x, (-1, 1)))
    theta = np.atleast_2d(res.theta_hat)
    save_matrix_csv(outdir / "theta_hat.csv", theta)
    save_matrix_csv(
        outdir / "objective_trace.csv", np.reshape(res.objective_trace, (-1, 1))
    )
    if args.uq:
        variant = hyper.variant
        for l, _ in enumerate(res.x_hat):
            theta_l = res.theta_hat if res.theta_hat.ndim == 1 else res.theta_hat[l]
            post = conditional_posterior(
                white.forward_ops[l], white.measurements[l], white.sparsifier,
                theta_l, variant,
            )
            draws = sample_posterior(post, args.samples, seed=(args.seed, 3, l))
            lo, hi = credible_intervals(draws, args.level)
            save_matrix_csv(outdir / f"samples_{l}.csv", draws)
            rows = [
                (i, lo[i], post.mean[i], hi[i]) for i in range(post.mean.shape[0])
            ]
            write_table_csv(
                outdir / f"intervals_{l}.csv", ["component", "lo", "mean", "hi"], rows
            )
    import json

    manifest = {
        "kind": "solve",
        "version": __version__,
        "config": {
            "algorithm": args.algorithm,
            "r": args.r, "beta": args.beta,
            "ias_params": list(ias_params), "gsbl_params": list(gsbl_params),
            "seed": args.seed, "uq": bool(args.uq),
            "samples": args.samples, "level": args.level,
            "converged": res.converged, "iterations": res.iterations,
        },
    }
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="jointsparse",
        description="Hierarchical Bayesian MAP estimation for jointly sparse "
        "recovery from multiple measurement vectors.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser(
        "deblur", formatter_class=fmt,
        help="jointly deconvolve piecewise-constant signals",
    )
    p.add_argument("--n", type=int, default=40, help="grid size")
    p.add_argument("--L", type=int, default=4, help="number of signals")
    p.add_argument("--sigma2", type=float, default=1e-2, help="noise variance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--algs", type=_comma_strs,
                   default=["ias", "mmv-ias", "gsbl", "mmv-gsbl"],
                   help="comma-separated algorithm list")
    p.add_argument("--samples", type=int, default=20000,
                   help="posterior draws per credible interval")
    p.add_argument("--level", type=float, default=0.999, help="credible level")
    p.add_argument("--outdir", default="runs/deblur", help="output directory")
    p.add_argument("--figures", action="store_true",
                   help="render default figures via plotkit when available")
    _add_hyper_flags(p, SIGNAL_IAS, SIGNAL_GSBL)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_deblur)

    p = sub.add_parser(
        "success", formatter_class=fmt,
        help="success probability and error versus measurement count",
    )
    p.add_argument("--N", type=int, default=100, help="signal dimension")
    p.add_argument("--s", type=int, default=20, help="support size")
    p.add_argument("--T", type=int, default=10, help="trials per grid point")
    p.add_argument("--sigma2", type=float, default=1e-6, help="noise variance")
    p.add_argument("--eps-tol", type=float, default=1e-2,
                   help="success threshold on the joint relative error")
    p.add_argument("--L", type=_comma_ints, default=[4, 8, 16],
                   help="comma-separated counts of coupled vectors")
    p.add_argument("--M", type=_comma_ints, default=None,
                   help="comma-separated measurement counts (default 10,20,...,N)")
    p.add_argument("--algs", type=_comma_strs,
                   default=["ias", "mmv-ias", "gsbl", "mmv-gsbl"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--outdir", default="runs/success")
    p.add_argument("--figures", action="store_true")
    _add_hyper_flags(p, SIGNAL_IAS, SIGNAL_GSBL)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_success)

    p = sub.add_parser(
        "phase", formatter_class=fmt,
        help="success-probability grid over sparsity and measurements",
    )
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--stride", type=int, default=5, help="grid stride on both axes")
    p.add_argument("--T", type=int, default=10)
    p.add_argument("--L", type=int, default=4)
    p.add_argument("--algorithm", default="mmv-ias",
                   choices=("ias", "mmv-ias", "gsbl", "mmv-gsbl"))
    p.add_argument("--sigma2", type=float, default=1e-6)
    p.add_argument("--eps-tol", type=float, default=1e-2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--outdir", default="runs/phase")
    p.add_argument("--figures", action="store_true")
    _add_hyper_flags(p, SIGNAL_IAS, SIGNAL_GSBL)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser(
        "mri", formatter_class=fmt,
        help="multi-coil radial Fourier imaging of the head phantom",
    )
    p.add_argument("--n", type=int, default=64, help="image side length")
    p.add_argument("--lines", type=_comma_ints, default=[4, 8, 12, 16, 20],
                   help="radial line counts to sweep")
    p.add_argument("--L", type=int, default=4, help="number of coils")
    p.add_argument("--sigma2", type=float, default=1e-3, help="noise variance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--algs", type=_comma_strs,
                   default=["ls", "ias", "gsbl", "mmv-ias", "mmv-gsbl"])
    p.add_argument("--full-scale", action="store_true",
                   help="use the 256x256 grid instead of --n")
    p.add_argument("--outdir", default="runs/mri")
    p.add_argument("--figures", action="store_true")
    _add_hyper_flags(p, IMAGING_IAS, IMAGING_GSBL)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_mri)

    p = sub.add_parser(
        "solve", formatter_class=fmt,
        help="run one algorithm on CSV inputs",
    )
    p.add_argument("--forward", nargs="+", required=True,
                   help="one dense forward-matrix CSV per measurement vector")
    p.add_argument("--data", nargs="+", required=True,
                   help="one measurement CSV per forward matrix")
    p.add_argument("--sparsifier", required=True, help="sparsifier matrix CSV")
    p.add_argument("--noise-cov", default=None,
                   help="optional noise covariance CSV (applied to every vector; "
                        "triggers whitening)")
    p.add_argument("--algorithm", default="mmv-ias",
                   choices=("ias", "mmv-ias", "gsbl", "mmv-gsbl"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--uq", action="store_true",
                   help="emit posterior samples and credible intervals")
    p.add_argument("--samples", type=int, default=1000, help="posterior draws")
    p.add_argument("--level", type=float, default=0.999, help="credible level")
    p.add_argument("--outdir", default="runs/solve")
    _add_hyper_flags(p, SIGNAL_IAS, SIGNAL_GSBL)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (JointSparseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
