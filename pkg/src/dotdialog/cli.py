"""Operator entry points: corpus generation, self-play batches, the reading
benchmark, terminal play, and service launch.

Exit codes: 0 success, 1 usage error, 2 data error. All commands are
deterministic under fixed seeds except wall-clock diagnostics, which go to
stderr or the marked trailing line of a report.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import httpx

from . import bench, transcripts
from .belief import PartnerModel
from .context import (
    ContextError, GenerationInfeasibleError, check_context, generate_context,
    read_corpus, write_corpus,
)
from .engine import EngineConfig, make_policy, run_selfplay
from .planner import PlannerConfig
from .reader import GRAMMAR_BACKEND, ReaderBackend

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


class DataError(Exception):
    pass


def _engine_config(args) -> EngineConfig:
    return EngineConfig(
        planner=PlannerConfig(theta=args.theta),
        partner_model=PartnerModel(epsilon_confirm=args.epsilon),
        compactness_rate=args.beta,
        turn_cap=args.turn_cap,
    )


def _backend(args) -> ReaderBackend:
    if getattr(args, "backend", "grammar") == "external":
        from . import llm
        return llm.from_env()
    return GRAMMAR_BACKEND


def _add_model_flags(parser) -> None:
    parser.add_argument("--theta", type=float, default=0.8,
                        help="selection confidence threshold")
    parser.add_argument("--epsilon", type=float, default=0.1,
                        help="partner confirmation noise")
    parser.add_argument("--beta", type=float, default=5.0,
                        help="compactness rate for interpretation weighting")
    parser.add_argument("--turn-cap", type=int, default=20)
    parser.add_argument("--backend", choices=("grammar", "external"), default="grammar")


def cmd_gen(args) -> int:
    if args.k > args.n:
        raise DataError(f"cannot share {args.k} dots with only {args.n} per view")
    contexts = []
    skipped = 0
    for seed in range(args.seed, args.seed + args.count):
        try:
            ctx = generate_context(seed, k=args.k, n_per_view=args.n)
            check_context(ctx, k=args.k, n_per_view=args.n)
            contexts.append(ctx)
        except GenerationInfeasibleError as e:
            skipped += 1
            print(f"warning: seed {seed} infeasible: {e}", file=sys.stderr)
    write_corpus(contexts, args.out)
    print(f"wrote {len(contexts)} contexts to {args.out} "
          f"(k={args.k}, n={args.n}, seeds {args.seed}..{args.seed + args.count - 1})")
    print(f"invariants verified on all {len(contexts)} contexts; {skipped} seeds skipped")
    return EXIT_OK


def cmd_selfplay(args) -> int:
    try:
        contexts = read_corpus(args.corpus)
    except (OSError, ContextError) as e:
        raise DataError(f"corpus {args.corpus}: {e}") from e
    if not contexts:
        print(json.dumps({"games": 0, "note": "empty corpus, no games played"}))
        return EXIT_OK
    backend = _backend(args)
    try:
        factory_a = make_policy(args.policy_a, backend)
        factory_b = make_policy(args.policy_b, backend)
    except ValueError as e:
        raise DataError(str(e)) from e
    cfg = _engine_config(args)
    start = time.perf_counter()
    results, records, summary = run_selfplay(contexts, factory_a, factory_b,
                                             cfg, seed=args.seed)
    elapsed = time.perf_counter() - start
    if args.out:
        transcripts.write_batch(records, args.out)
    print(json.dumps(summary, sort_keys=True))
    print(f"policy_a={args.policy_a} policy_b={args.policy_b} "
          f"success={summary['success_rate']:.1%} "
          f"turns={summary['mean_turns']:.2f} "
          f"words(mean/median)={summary['words_per_utterance_mean']:.2f}"
          f"/{summary['words_per_utterance_median']:.1f}")
    print(f"elapsed: {elapsed:.1f}s over {summary['games']} games", file=sys.stderr)
    return EXIT_OK


def cmd_readbench(args) -> int:
    backend = _backend(args)
    report = bench.run_readbench(args.samples, seed=args.seed, backend=backend)
    for line in bench.report_lines(report):
        print(line)
    return EXIT_OK


def _print_board(scene_payload: dict, out) -> None:
    print("your view (coordinates in your own frame, radius "
          f"{scene_payload['radius']}):", file=out)
    for dot in scene_payload["dots"]:
        print(f"  dot {dot['id']:>3}: x={dot['x']:+.3f} y={dot['y']:+.3f} "
              f"size={dot['size']:+.2f} color={dot['color']:+.2f}", file=out)


def cmd_play(args) -> int:
    if args.url:
        client = httpx.Client(base_url=args.url, timeout=60.0)
    else:
        # in-process service behind the same HTTP surface a remote one exposes
        from fastapi.testclient import TestClient
        from .service import create_app
        client = TestClient(create_app(_engine_config(args), _backend(args)))
    body = {"k": args.k, "n_per_view": args.n}
    if args.seed is not None:
        body["seed"] = args.seed
    response = client.post("/sessions", json=body)
    if response.status_code != 200:
        raise DataError(f"could not create session: {response.text}")
    session = response.json()
    sid = session["session_id"]
    print("you are playing the partner side; find a dot you share with the agent.")
    print("say something, or: select <id> | board | quit")
    _print_board(session["scene"], sys.stdout)
    while True:
        try:
            line = input("> ").strip()
        except EOFError:
            print("\nbye")
            return EXIT_OK
        if not line:
            continue
        if line in ("quit", "exit"):
            print("bye")
            return EXIT_OK
        if line == "board":
            _print_board(session["scene"], sys.stdout)
            continue
        if line.startswith("select"):
            parts = line.split()
            if len(parts) != 2 or not parts[1].lstrip("-").isdigit():
                print("usage: select <dot id>")
                continue
            response = client.post(f"/sessions/{sid}/selection",
                                   json={"dot_id": int(parts[1])})
            if response.status_code != 200:
                print(f"error: {response.json().get('detail', response.text)}")
                continue
            result = response.json()
            outcome = "success!" if result["success"] else "no match."
            print(f"{outcome} you chose {result['partner_selection']}, "
                  f"the agent chose {result['agent_selection']}.")
            return EXIT_OK
        response = client.post(f"/sessions/{sid}/utterance", json={"text": line})
        if response.status_code != 200:
            print(f"error: {response.json().get('detail', response.text)}")
            continue
        reply = response.json()
        print(f"agent: {reply['text']}")
        if reply["kind"] == "selection":
            print("the agent has made its selection; use `select <id>` to finish.")


def cmd_serve(args) -> int:
    import uvicorn
    from .service import create_app
    app = create_app(_engine_config(args), _backend(args), transcript_dir=args.transcript_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="dotdialog",
                     description="collaborative dot-finding dialogue game")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a context corpus")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--count", type=int, default=200, help="number of contexts")
    p.add_argument("--k", type=int, default=4, help="shared dot count")
    p.add_argument("--n", type=int, default=7, help="dots per view")
    p.add_argument("--out", required=True, help="corpus output path (jsonl)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("selfplay", help="run a self-play batch over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", help="transcript output path (jsonl)")
    p.add_argument("--policy-a", default="planner")
    p.add_argument("--policy-b", default="planner")
    p.add_argument("--seed", type=int, default=0)
    _add_model_flags(p)
    p.set_defaults(func=cmd_selfplay)

    p = sub.add_parser("readbench", help="write/read round-trip benchmark")
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=("grammar", "external"), default="grammar")
    p.set_defaults(func=cmd_readbench)

    p = sub.add_parser("play", help="play against the agent in the terminal")
    p.add_argument("--url", help="remote service URL (default: in-process service)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--n", type=int, default=7)
    _add_model_flags(p)
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("serve", help="launch the session API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--transcript-dir", default=None)
    _add_model_flags(p)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    from .llm import ExternalBackendError
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ContextError, ExternalBackendError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
