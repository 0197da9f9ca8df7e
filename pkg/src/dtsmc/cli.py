"""Command-line interface: ``dtsmc {simulate,estimate,exact,variance,validate}``.

Exit codes: 0 success, 2 input or usage error, 3 not enough data
(a state needed by the requested estimator was never visited).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import asymptotics as asy
from .chain import PartitionUD, check_assumptions, load_kernel, summarize
from .errors import EmptyTrajectory, SemiMarkovError, UnvisitedState
from .estimators import bundle_to_dict, default_horizon, estimate_all
from .renewal import distribution_sequence, markov_renewal_function, reliability_sequence
from .simulate import load_trajectory, save_trajectory, simulate
from .validation import config_from_dict, run_clt_experiment

EXIT_OK, EXIT_INPUT, EXIT_DATA = 0, 2, 3


class UsageError(Exception):
    pass


def _emit(doc, out):
    text = json.dumps(doc, indent=1) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _partition(states, spec):
    if not spec:
        return None
    return PartitionUD(states, tuple(s for s in spec.split(",") if s))


def _coords(spec, target):
    if not spec:
        return None
    out = []
    for item in spec.split(","):
        parts = item.split(":")
        want = 2 if target == "R" else 3
        if len(parts) != want:
            raise UsageError(f"coordinate {item!r}: expected {want} ':'-separated fields")
        try:
            out.append((*parts[:-1], int(parts[-1])))
        except ValueError:
            raise UsageError(f"coordinate {item!r}: lag must be an integer") from None
    return out


def cmd_simulate(args):
    kernel = load_kernel(args.kernel)
    traj = simulate(kernel, args.i0, args.M, args.seed)
    if args.out:
        save_trajectory(traj, args.out)
    else:
        from .simulate import trajectory_to_csv

        sys.stdout.write(trajectory_to_csv(traj))


def cmd_estimate(args):
    traj = load_trajectory(args.trajectory)
    K = args.horizon if args.horizon is not None else 2 * traj.states.size * max(int(traj.sojourns.max(initial=1)), 1)
    bundle = estimate_all(
        traj, K, partition=_partition(traj.states, args.up), distribution=not args.kernel_only
    )
    _emit(bundle_to_dict(bundle), args.out)


def cmd_exact(args):
    kernel = load_kernel(args.kernel)
    K = args.horizon if args.horizon is not None else default_horizon(kernel)
    psi = markov_renewal_function(kernel.q, K)
    doc = {
        "states": list(kernel.states.labels),
        "K": K,
        "psi": psi.tolist(),
        "P": distribution_sequence(kernel.q, K, psi=psi).tolist(),
    }
    part = _partition(kernel.states, args.up)
    if part is not None:
        R = reliability_sequence(kernel.q, part.up_index, K)
        doc["partition"] = {"up": list(part.up), "down": list(part.down)}
        doc["R"] = {s: R[:, a].tolist() for a, s in enumerate(part.up)}
    _emit(doc, args.out)


def cmd_variance(args):
    kernel = load_kernel(args.kernel)
    K = args.horizon if args.horizon is not None else default_horizon(kernel)
    part = _partition(kernel.states, args.up)
    if args.target == "R" and part is None:
        raise UsageError("target R needs --up")
    summary = summarize(kernel)
    if args.target == "q":
        table = asy.V_q(kernel, summary, K)
    elif args.target == "psi":
        table = asy.V_psi(kernel, summary, K)
    elif args.target == "P":
        table = asy.V_P(kernel, summary, K)
    else:
        table = asy.V_R(kernel, summary, part, K)
    coords = _coords(args.coords, args.target)
    if coords:
        table = table.subset(coords)
    _emit(table.to_dict(diagonal_only=args.diagonal_only), args.out)


def cmd_validate(args):
    try:
        doc = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {args.config!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.config}: line {exc.lineno}: {exc.msg}") from None
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.level is not None:
        doc["level"] = args.level
    cfg = config_from_dict(doc)
    cfg.threads = args.threads if args.threads is not None else (os.cpu_count() or 1)
    assumptions = check_assumptions(cfg.kernel)
    report = run_clt_experiment(cfg)
    out = report.to_dict()
    out["assumptions"] = {
        "irreducible": assumptions.irreducible,
        "aperiodic": assumptions.aperiodic,
        "positive_recurrent": assumptions.positive_recurrent,
        "checked_up_to": assumptions.checked_up_to,
    }
    _emit(out, args.out)
    if args.deviations:
        Path(args.deviations).write_text(report.deviations_csv())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dtsmc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="sample a trajectory to CSV")
    s.add_argument("--kernel", required=True)
    s.add_argument("--i0", required=True, help="initial state label")
    s.add_argument("-M", "--M", type=int, required=True, dest="M")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("estimate", help="estimate q, psi, P (and R) from a trajectory CSV")
    s.add_argument("--trajectory", required=True)
    s.add_argument("--horizon", "-K", type=int)
    s.add_argument("--up", help="comma-separated up states U")
    s.add_argument("--kernel-only", action="store_true", help="skip P_hat")
    s.add_argument("--out")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("exact", help="psi, P (and R) at the true kernel")
    s.add_argument("--kernel", required=True)
    s.add_argument("--horizon", "-K", type=int)
    s.add_argument("--up")
    s.add_argument("--out")
    s.set_defaults(func=cmd_exact)

    s = sub.add_parser("variance", help="asymptotic covariance table")
    s.add_argument("--kernel", required=True)
    s.add_argument("--horizon", "-K", type=int)
    s.add_argument("--target", choices=["q", "psi", "P", "R"], required=True)
    s.add_argument("--coords", help="e.g. a:b:1,a:a:2 (or a:3 for R)")
    s.add_argument("--up")
    s.add_argument("--diagonal-only", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_variance)

    s = sub.add_parser("validate", help="Monte Carlo CLT check from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--threads", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--level", type=float)
    s.add_argument("--out")
    s.add_argument("--deviations", help="write per-replication deviations CSV here")
    s.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (UnvisitedState, EmptyTrajectory) as exc:
        print(f"dtsmc: insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SemiMarkovError, UsageError) as exc:
        print(f"dtsmc: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
