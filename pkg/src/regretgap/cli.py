"""Command-line harness: gen, eval, train, verify, sweep.

Exit codes: 0 all checks passed, 1 check failure, 2 usage or config error,
3 assumption violation (an importance weight needed expert density that is
zero).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import io
from .evaluate import evaluate_pair, value_gap, regret_gap
from .fixtures import alice_lb_game, coverage_lb_game, fig1_game, multi_ce_nfg, random_mg
from .games import (
    CoverageError,
    DeviationClass,
    sample_demonstrations,
    validate_game,
    validate_policy,
)
from .harness import ReportRow, run_suite, run_sweep, write_rows
from .learners import ExpertOracle, TrainConfig, blades_train, j_bc, j_irl, malice_train

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_ASSUMPTION = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regretgap",
        description="Generate, evaluate, train, and verify mediator policies on tabular Markov games.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="write a named fixture's files to a directory")
    p_gen.add_argument("--name", required=True,
                       help="fig1 | coverage-lb | alice-lb | multi-ce-nfg | random")
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--horizon", type=int, default=None)
    p_gen.add_argument("--u", type=float, default=None)
    p_gen.add_argument("--beta", type=float, default=None)
    p_gen.add_argument("--eps", type=float, default=None)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--states", type=int, default=4)
    p_gen.add_argument("--agents", type=int, default=2)

    p_eval = sub.add_parser("eval", help="evaluate an expert/learner pair")
    p_eval.add_argument("--game", required=True)
    p_eval.add_argument("--expert", required=True)
    p_eval.add_argument("--learner", required=True)
    p_eval.add_argument("--deviations", choices=("complete", "file"), default="complete")
    p_eval.add_argument("--deviation-file", action="append", default=[])
    p_eval.add_argument("--out-json", default=None)
    p_eval.add_argument("--out-csv", default=None)

    p_train = sub.add_parser("train", help="train a mediator policy")
    p_train.add_argument("--algo", required=True, choices=("jbc", "jirl", "malice", "blades"))
    p_train.add_argument("--game", required=True)
    p_train.add_argument("--expert", required=True,
                         help="expert policy file; held by the harness, learners see it only "
                              "through densities, demonstrations, or oracle queries")
    p_train.add_argument("--deviation-file", action="append", default=[])
    p_train.add_argument("--rounds", type=int, default=500)
    p_train.add_argument("--demos", type=int, default=200)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--fill-rule", default="uniform",
                         choices=("uniform", "copy-expert", "adversarial-worst-case"))
    p_train.add_argument("--out", required=True)

    p_verify = sub.add_parser("verify", help="run a named verification suite")
    p_verify.add_argument("--suite", required=True)
    p_verify.add_argument("--tolerance", type=float, default=None)
    p_verify.add_argument("--out", default=None)

    p_sweep = sub.add_parser("sweep", help="grid sweep from a JSON config")
    p_sweep.add_argument("--config", required=True)

    return parser


def _cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    name = args.name
    written = []
    if name == "fig1":
        fx = fig1_game(args.horizon if args.horizon is not None else 8)
    elif name == "coverage-lb":
        fx = coverage_lb_game(args.horizon if args.horizon is not None else 20,
                              args.u if args.u is not None else 10,
                              args.beta if args.beta is not None else 0.05,
                              args.eps if args.eps is not None else 0.001)
    elif name == "alice-lb":
        fx = alice_lb_game(args.horizon if args.horizon is not None else 20,
                           args.u if args.u is not None else 6,
                           args.beta if args.beta is not None else 0.1,
                           args.eps if args.eps is not None else 0.005)
    elif name == "multi-ce-nfg":
        fx_r, fx_rp = multi_ce_nfg()
        written.append(io.save_game(fx_r.game, out / "game_r.json"))
        written.append(io.save_game(fx_rp.game, out / "game_rprime.json"))
        written.append(io.save_policy(fx_r.expert, out / "expert.json"))
        written.append(io.save_policy(fx_r.learner, out / "learner.json"))
        written.append(io.save_json({"r": fx_r.expected, "rprime": fx_rp.expected},
                                    out / "expected.json"))
        for p in written:
            print(p)
        return EXIT_OK
    elif name == "random":
        fx = random_mg(args.seed, n_states=args.states,
                       horizon=args.horizon if args.horizon is not None else 4,
                       action_counts=tuple([2] * args.agents),
                       full_coverage_expert=True)
    else:
        print(f"unknown fixture name {name!r}", file=sys.stderr)
        return EXIT_USAGE
    written.append(io.save_game(fx.game, out / "game.json"))
    written.append(io.save_policy(fx.expert, out / "expert.json"))
    written.append(io.save_policy(fx.learner, out / "learner.json"))
    for k, dev in enumerate(fx.witness_deviations):
        written.append(io.save_deviation(dev, fx.game, out / f"deviation_{k}.json"))
    written.append(io.save_json({"expected": fx.expected, "params": fx.params,
                                 "notes": fx.notes}, out / "expected.json"))
    for p in written:
        print(p)
    return EXIT_OK


def _load_deviation_class(args, game) -> DeviationClass:
    if args.deviations == "complete":
        return DeviationClass.complete(game.num_agents)
    if not args.deviation_file:
        raise ValueError("--deviations file needs at least one --deviation-file")
    per_agent = [[] for _ in range(game.num_agents)]
    for path in args.deviation_file:
        dev = io.load_deviation(path, game)
        per_agent[dev.agent].append(dev)
    return DeviationClass.explicit(game, per_agent)


def _cmd_eval(args) -> int:
    game = io.load_game(args.game)
    report = validate_game(game)
    if not report.ok:
        for v in report.violations:
            print(f"game validation: {v}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    expert = io.load_policy(args.expert)
    learner = io.load_policy(args.learner)
    for tag, pol in (("expert", expert), ("learner", learner)):
        rep = validate_policy(game, pol)
        if not rep.ok:
            for v in rep.violations:
                print(f"{tag} validation: {v}", file=sys.stderr)
            return EXIT_CHECK_FAILED
    deviations = _load_deviation_class(args, game)
    t0 = time.perf_counter()
    result = evaluate_pair(game, expert, learner, deviations)
    if args.out_json:
        io.save_json(result.to_json_dict(), args.out_json)
    row = ReportRow(
        suite="eval", fixture=Path(args.game).stem, H=game.horizon, m=game.num_agents,
        beta=result.beta, u=result.u, value_gap=result.value_gap,
        regret_gap=result.regret_gap, measured=result.regret_gap, passed=True,
        runtime_ms=(time.perf_counter() - t0) * 1000.0,
    )
    if args.out_csv:
        write_rows(args.out_csv, [row])
    print(json.dumps(result.to_json_dict()))
    return EXIT_OK


def _cmd_train(args) -> int:
    game = io.load_game(args.game)
    expert = io.load_policy(args.expert)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.deviation_file:
        per_agent = [[] for _ in range(game.num_agents)]
        for path in args.deviation_file:
            dev = io.load_deviation(path, game)
            per_agent[dev.agent].append(dev)
        phi = DeviationClass.explicit(game, per_agent)
    else:
        phi = DeviationClass.identities(game)
    cfg = TrainConfig(rounds=args.rounds, seed=args.seed)
    summary: dict = {"algo": args.algo, "rounds": args.rounds, "seed": args.seed}
    trace = ()
    if args.algo == "jbc":
        policy = j_bc(game, expert=expert, fill_rule=args.fill_rule, deviations=phi)
        from .evaluate import occupancy_bundle
        from .losses import bc_loss

        summary["final_loss"] = bc_loss(expert, policy, occupancy_bundle(game, expert).avg_state)
    elif args.algo == "jirl":
        res = j_irl(game, expert, rounds=args.rounds)
        policy = res.policy
        summary["final_loss"] = res.final_error
        summary["best_round"] = res.best_round
    elif args.algo == "malice":
        res = malice_train(game, expert, phi, cfg)
        policy, trace = res.policy, res.trace
        summary["final_loss"] = res.final_loss
        summary["best_round"] = res.best_round
    else:
        oracle = ExpertOracle(expert)
        demos = sample_demonstrations(game, expert, args.demos, seed=args.seed)
        res = blades_train(game, oracle, demos, phi, cfg)
        policy, trace = res.policy, res.trace
        summary["final_loss"] = res.final_loss
        summary["best_round"] = res.best_round
        summary["query_count"] = res.query_count
        with open(out / "queries.jsonl", "w") as fh:
            for entry in res.query_log:
                fh.write(json.dumps(entry) + "\n")
    io.save_policy(policy, out / "policy.json")
    if trace:
        with open(out / "trace.csv", "w", newline="") as fh:
            fh.write("round,loss,achieving_agent,achieving_deviation,step_size\n")
            for row in trace:
                fh.write(f"{row.round},{row.loss},{row.achieving_agent},"
                         f"{row.achieving_deviation},{row.step_size}\n")
    summary["value_gap"] = value_gap(game, expert, policy)
    summary["regret_gap"] = regret_gap(game, expert, policy, phi)
    io.save_json(summary, out / "summary.json")
    print(json.dumps(summary))
    return EXIT_OK


def _cmd_verify(args) -> int:
    if args.tolerance is not None and args.tolerance <= 0:
        print("tolerance must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        rows = run_suite(args.suite, args.tolerance)
    except KeyError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    for row in rows:
        status = "PASS" if row.passed else "FAIL"
        print(f"[{status}] {row.suite} :: {row.fixture} "
              f"(measured={row.measured}, expected={row.expected}, bound={row.bound})")
    if args.out:
        write_rows(args.out, rows)
    return EXIT_OK if all(r.passed for r in rows) else EXIT_CHECK_FAILED


def _cmd_sweep(args) -> int:
    config = io.load_json(args.config)
    rows, summary = run_sweep(config)
    out = config.get("out", "sweep.csv")
    write_rows(out, rows)
    summary_path = Path(out).with_suffix(".summary.json")
    io.save_json(summary, summary_path)
    print(json.dumps(summary))
    return EXIT_OK if summary["failed"] == 0 else EXIT_CHECK_FAILED


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return EXIT_USAGE
    except CoverageError as exc:
        print(f"assumption violation: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except (ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
