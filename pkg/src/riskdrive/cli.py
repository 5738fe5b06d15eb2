"""Command-line entry points.

Subcommands: train, eval, attack, ablate, fit-ood, serve, report.
Exit codes: 0 success, 1 configuration error, 2 runtime failure,
3 acceptance regression (any seed failed inside an experiment).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from .config import ConfigError, load_config


def _parse_seeds(spec: str) -> list[int]:
    if ".." in spec:
        lo, hi = spec.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in spec.split(",") if s]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskdrive",
        description="Risk-aware shielded driving testbed")
    parser.add_argument("--config", type=Path, default=None,
                        help="YAML config file (defaults apply when omitted)")
    parser.add_argument("--workdir", type=Path, default=Path("runs/latest"))
    parser.add_argument("--seeds", type=str, default="0..4",
                        help="e.g. 0..4 or 1,3,5")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train with the full pipeline")
    p_train.add_argument("--ood", type=Path, default=None,
                         help="OOD model artifact (fit one if omitted)")

    for name in ("eval", "attack", "ablate"):
        p = sub.add_parser(name)
        p.add_argument("--checkpoint", type=Path, default=None)
        p.add_argument("--episodes", type=int, default=10,
                       help="episodes per seed")
        p.add_argument("--ood", type=Path, default=None)
        if name in ("attack", "ablate"):
            p.add_argument("--attack", choices=["can", "lidar"],
                           default="can")

    p_fit = sub.add_parser("fit-ood", help="fit the clean-scan OOD model")
    p_fit.add_argument("--out", type=Path, required=True)
    p_fit.add_argument("--ticks", type=int, default=300,
                       help="clean ticks per seed")

    p_serve = sub.add_parser("serve", help="live bridge for the operator UI")
    p_serve.add_argument("--port", type=int, default=8700)
    p_serve.add_argument("--checkpoint", type=Path, default=None)
    p_serve.add_argument("--attack", choices=["none", "can", "lidar"],
                         default="none")
    p_serve.add_argument("--episodes", type=int, default=100)
    p_serve.add_argument("--realtime", action="store_true",
                         help="pace the loop at the control rate")

    p_report = sub.add_parser("report", help="recompute metrics from traces")
    p_report.add_argument("--from", dest="trace_dir", type=Path, required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        seeds = _parse_seeds(args.seeds)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    from . import experiment
    try:
        if args.command == "train":
            result = experiment.run_experiment(
                "train", cfg, seeds, args.workdir, ood_path=args.ood)
            print(f"trained {len(seeds) - len(result.failed_seeds)}/"
                  f"{len(seeds)} seeds; report in {args.workdir}")
            return 3 if result.failed_seeds else 0

        if args.command in ("eval", "attack", "ablate"):
            if args.command in ("attack", "ablate"):
                cfg = experiment.apply_overrides(
                    cfg, {"attack": {"kind": args.attack}})
            result = experiment.run_experiment(
                args.command, cfg, seeds, args.workdir,
                episodes_per_seed=args.episodes,
                checkpoint=args.checkpoint, ood_path=args.ood)
            if result.report is not None:
                from .metrics import format_table
                print(format_table(result.report, args.command))
            else:
                print(f"ablation rows written under {args.workdir}")
            return 0

        if args.command == "fit-ood":
            experiment.fit_ood(cfg, seeds, args.out, args.ticks)
            print(f"OOD model written to {args.out}")
            return 0

        if args.command == "report":
            report = experiment.report_from_traces(args.trace_dir, args.workdir)
            from .metrics import format_table
            print(format_table(report))
            return 0

        if args.command == "serve":
            return _serve(cfg, args)
        raise AssertionError(f"unhandled command {args.command}")
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        logging.getLogger("riskdrive").exception("runtime failure")
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


def _serve(cfg, args) -> int:
    from .bandit import BanditArbiter
    from .bridge import BridgeServer
    from .episode import EpisodeHooks, run_episode
    from .expert import expert_action
    from .experiment import apply_overrides
    from .sac import SacLearner
    from .train import learner_policy
    from .world import make_rng, reset_episode

    cfg = apply_overrides(cfg, {"attack": {"kind": args.attack},
                                "expert": {"mode": "ui"}})
    learner = None
    if args.checkpoint is not None:
        learner, _ = SacLearner.load(args.checkpoint)
        learner.normalizer.frozen = True

    server = BridgeServer(args.port)
    print(f"bridge listening on ws://127.0.0.1:{server.port}", flush=True)
    dt = cfg.vehicle.dt
    try:
        for ep in range(args.episodes):
            seed = _parse_seeds(args.seeds)[0] * 1000 + ep
            world = reset_episode(seed, cfg.scenario, cfg.vehicle, cfg.lidar)
            server.set_hello({
                "centerline": world.route.points[::2].tolist(),
                "lane_width": world.route.lane_width,
                "goal": world.route.goal.tolist(),
                "threshold": cfg.irs.threshold,
                "dt": dt,
            })
            if learner is not None:
                policy = learner_policy(learner, make_rng(seed, "policy"),
                                        deterministic=True)
            else:
                def policy(obs, w):
                    return expert_action(w, obs, cfg.expert)

            last = [time.monotonic()]

            def paced_snapshot(snap):
                server.send_snapshot(snap)
                if args.realtime:
                    now = time.monotonic()
                    delay = dt - (now - last[0])
                    if delay > 0:
                        time.sleep(delay)
                    last[0] = time.monotonic()

            hooks = EpisodeHooks(on_snapshot=paced_snapshot,
                                 override_provider=server.poll_override)
            bandit = BanditArbiter(cfg.bandit, make_rng(seed, "bandit"))
            result = run_episode(cfg, seed, policy, bandit=bandit, hooks=hooks)
            print(f"episode {ep}: {result.outcome.kind} "
                  f"after {result.outcome.step_count} ticks")
    except KeyboardInterrupt:
        pass
    finally:
        server.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
