"""Command line front end.

    onebit-doa run --spec FILE [--out DIR] [--set key=value ...] [--workers N]
    onebit-doa trial --spec FILE [--seed S] [--set key=value ...] [--verbose]
    onebit-doa verify
    onebit-doa describe --spec FILE [--set key=value ...]

The default output directory comes from ``$ONEBIT_DOA_OUT`` (else ``results``).
"""

import argparse
import os
import sys

import numpy as np

from . import config as cfgmod
from .simulator import run_experiment, run_trial, snr_from_noise_var

EXIT_USAGE = 2


def _load(args):
    if not os.path.isfile(args.spec):
        raise FileNotFoundError(f"spec file not found: {args.spec}")
    return cfgmod.load_spec_file(args.spec, args.set or [])


def cmd_run(args):
    raw, _ = _load(args)
    out_dir = args.out or os.environ.get("ONEBIT_DOA_OUT", "results")
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "resolved_spec.yaml"), "w") as fh:
        fh.write(cfgmod.dump_spec(raw))
    specs = cfgmod.experiment_specs(raw)
    if not specs:
        print("spec defines no experiments", file=sys.stderr)
        return 1
    for name, (spec, outputs) in specs.items():
        paths = [os.path.join(out_dir, o) for o in outputs]
        rows = run_experiment(spec, paths, workers=args.workers)
        if args.verbose:
            for row in rows:
                print(name, row)
        for p in paths:
            print(f"wrote {p}")
    return 0


def cmd_trial(args):
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"scenario.seed={args.seed}")
    args.set = overrides
    raw, _ = _load(args)
    spec = cfgmod.scenario_spec(raw)
    res = run_trial(spec, 0, 0, keep_trace=True)
    cfg = spec.cfg
    print(f"M={cfg.M} N_p={cfg.N_p} N={cfg.N} noise_var={cfg.noise_var:.6g} "
          f"SNR={snr_from_noise_var(cfg.noise_var, cfg):.2f} dB seed={spec.seed}")
    if args.verbose:
        print("iter,residual,norm_x,lambda")
        for row in res.trace:
            print(f"{row['iter']},{row['residual']:.6e},{row['norm_x']:.6e},{row.get('lambda', float('nan')):.6e}")
    print(f"GAMP iterations: {res.iterations} converged: {res.converged}")
    if res.error:
        print(f"trial failed: {res.error}")
        return 1
    print(f"selected columns: {res.column_indices.tolist()} (model order {res.model_order_detected})")
    truth = spec.params.thetas
    for i, j in res.assignment:
        print(f"  col {res.column_indices[i]}: theta_hat={res.theta_hat[i]:.6f} deg  truth={truth[j]:.6f} deg  "
              f"err={res.theta_hat[i] - truth[j]:+.3e}  alpha_hat={res.D_hat[i]:.4f}  "
              f"alpha={spec.params.alphas[j]:.4f}")
    print(f"RMSE_theta={res.matched_rmse_theta:.6e} deg  NMSE_D={res.nmse_D_db:.2f} dB  NMSE_H={res.nmse_H_db:.2f} dB")
    return 0


def cmd_verify(args):
    from .verify import run_checks

    return 0 if run_checks(corrupt_mills=args.corrupt_mills) else 1


def cmd_describe(args):
    raw, _ = _load(args)
    spec = cfgmod.scenario_spec(raw)
    cfg = spec.cfg
    print(cfgmod.dump_spec(raw), end="")
    print(f"# M_y={cfg.M * cfg.N_p} N_x={cfg.M * cfg.N} paths={cfg.n_paths} "
          f"SNR={snr_from_noise_var(cfg.noise_var, cfg):.2f} dB")
    for name, (s, outputs) in cfgmod.experiment_specs(raw).items():
        print(f"# experiment {name}: {s.sweep_axis} in {list(s.sweep_values)} x {s.trials} trials -> {outputs}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="onebit-doa", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, need_spec=True):
        sp.add_argument("--spec", required=need_spec, help="experiment spec (YAML)")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="dotted-key override, repeatable")
        sp.add_argument("--verbose", action="store_true")

    sp = sub.add_parser("run", help="run every experiment in a spec file")
    common(sp)
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("trial", help="run one trial of the scenario with a verbose report")
    common(sp)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_trial)

    sp = sub.add_parser("verify", help="run the oracle checks")
    sp.add_argument("--corrupt-mills", action="store_true", help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("describe", help="print the resolved spec")
    common(sp)
    sp.set_defaults(func=cmd_describe)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    np.seterr(all="ignore")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except cfgmod.SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
