"""Command line entry point ``spectest`` with ``test``, ``simulate`` and ``experiment`` subcommands.

Exit codes for ``spectest test``: 0 when the null is not rejected, 10 when
it is rejected, 2 for usage or input errors and 3 for a degenerate scale.
"""
from __future__ import annotations

import argparse
import sys
import warnings

from . import __version__
from .errors import DegenerateScaleError, SpectestError
from .harness import ExperimentConfig, export, run_experiment
from .kernels import KERNELS, get_kernel, smooth
from .models import Innovation, preset, simulate
from .randomization import RandomizationConfig, prepare_bandwidth, run_randomization_test
from .series import demean, periodogram, read_csv, write_csv
from .statistic import CenteringEstimates, asymptotic_test, compute_tn, estimate_mu_hat, estimate_tau_hat_sq

EXIT_ACCEPT, EXIT_REJECT, EXIT_INPUT, EXIT_DEGENERATE = 0, 10, 2, 3


def _positive_float(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {s}")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spectest", description="Tests for equal diagonal spectral density blocks.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="run a test on a CSV panel")
    t.add_argument("--input", required=True, help="CSV file, one row per time point")
    t.add_argument("--p", type=int, default=1, help="block dimension")
    t.add_argument("--q", type=int, default=None, help="number of groups (default: columns / p)")
    t.add_argument("--kind", choices=["asymptotic", "uncentered", "centered", "studentized"], default="studentized")
    t.add_argument("--B", type=int, default=299, help="randomization draws")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--seed", type=int, default=0)
    bw = t.add_mutually_exclusive_group()
    bw.add_argument("--bandwidth", type=_positive_float, help="fixed bandwidth h")
    bw.add_argument("--cv", action="store_true", help="cross-validated bandwidth (default)")
    t.add_argument("--cv-mult", type=_positive_float, default=1.0, help="multiplier c applied to h_CV")
    t.add_argument("--kernel", choices=sorted(KERNELS), default="bartlett-priestley")
    t.add_argument("--workers", type=int, default=1)
    t.add_argument("--no-demean", action="store_true", help="skip column centering")
    t.add_argument("--literal-rule", action="store_true", help="use the literal fraction-above-alpha rule")
    t.add_argument("--tau-plugin", choices=["pooled", "raw"], default="pooled")

    s = sub.add_parser("simulate", help="simulate a preset model to CSV")
    s.add_argument("--model", required=True)
    s.add_argument("--innovation", default="gaussian", choices=[m.value for m in Innovation])
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--burn-in", type=int, default=500)
    s.add_argument("--out", required=True)

    e = sub.add_parser("experiment", help="run a size/power experiment from a config file")
    e.add_argument("--config", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--paper-scale", action="store_true", help="T=400 replications, B=300 draws")
    e.add_argument("--format", choices=["csv", "text"], default=None,
                   help="output format (default: from the file suffix)")
    return ap


def _cmd_test(args) -> int:
    panel = read_csv(args.input, args.p, args.q)
    if args.kind == "asymptotic":
        kernel = get_kernel(args.kernel)
        if not args.no_demean:
            panel = demean(panel)
        bwd = prepare_bandwidth(panel, kernel, args.bandwidth, args.cv_mult)
        sm = smooth(periodogram(panel), kernel, bwd.h)
        cent = CenteringEstimates(
            mu_hat=estimate_mu_hat(sm, kernel, panel.p, panel.q),
            tau_hat_sq=estimate_tau_hat_sq(sm, kernel, panel.p, panel.q, args.tau_plugin),
        )
        meta = {"p": panel.p, "q": panel.q, "seed": None, "B": None, "bandwidth": bwd.describe(), "kernel": kernel.name}
        report = asymptotic_test(compute_tn(sm, panel.p, panel.q, bwd.h), cent, args.alpha, meta)
    else:
        cfg = RandomizationConfig(
            kind=args.kind, B=args.B, alpha=args.alpha, seed=args.seed, kernel=args.kernel,
            bandwidth=args.bandwidth, cv_mult=args.cv_mult, workers=args.workers,
            demean=not args.no_demean, literal_rule=args.literal_rule, tau_plugin=args.tau_plugin,
        )
        report = run_randomization_test(panel, cfg)
    sys.stdout.write(report.to_text())
    return EXIT_REJECT if report.reject else EXIT_ACCEPT


def _cmd_simulate(args) -> int:
    spec = preset(args.model, args.innovation, args.burn_in)
    write_csv(simulate(spec, args.n, args.seed), args.out)
    return 0


def _cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_ini(args.config)
    if args.paper_scale:
        cfg = cfg.paper_scale()
    fmt = args.format or ("text" if str(args.out).endswith(".txt") else "csv")
    table = run_experiment(cfg, workers=args.workers)
    export(table, args.out, fmt)
    print(f"wrote {len(table)} cells to {args.out} in {table.wall_time:.1f}s", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"test": _cmd_test, "simulate": _cmd_simulate, "experiment": _cmd_experiment}[args.command]
    warnings.simplefilter("default")
    try:
        return handler(args)
    except DegenerateScaleError as exc:
        print(f"spectest: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (SpectestError, OSError) as exc:
        print(f"spectest: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
