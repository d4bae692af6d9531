"""``cellclust`` command line."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import goldens
from .agent import AgentConfig, dumps_trace, run_agent
from .cluster import ConstraintError, cluster_score, dumps_constraints, format_score, validate_constraints, read_constraints
from .netlist import read_netlist
from .optimize import SAConfig, run_sa
from .prompts import (
    GuidanceConfig,
    netlist_topology_prompt,
    physical_layout_prompt,
    routability_prompt,
    system_guidance,
)
from .runner import RunConfig, load_session, replay, run_batch, write_log
from .tools import ToolCall, invoke, list_tools


def _session_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("netlist", help="netlist file")
    p.add_argument("--constraints", help="initial cluster constraints JSON")
    p.add_argument("--layout", help="layout JSON")
    p.add_argument("--routability", help="routability report JSON")


def _session(args):
    return load_session(args.netlist, args.constraints, args.layout, args.routability)


def cmd_score(args) -> int:
    n = read_netlist(args.netlist)
    cc = read_constraints(args.constraints) if args.constraints else None
    report = validate_constraints(n, cc or {})
    if not report.valid:
        print(report, file=sys.stderr)
        return 1
    sb = cluster_score(n, cc or {}, exclude_nets=args.exclude_net or ())
    print(f"{'cluster':<20} {'devices':>7} {'diff_pairs':>10} {'gates':>5} {'contrib':>8}")
    for name, c in sb.per_cluster.items():
        print(
            f"{name:<20} {c.t_c:>7} {c.diffusion_pairs:>10} {c.common_gates:>5}"
            f" {format_score(c.contribution):>8}"
        )
    print(f"Cluster score: {format_score(sb.total)}")
    return 0


def _write_guarded(path: Path, text: str, bless: bool) -> bool:
    if path.exists() and path.read_text(encoding="utf-8") != text and not bless:
        print(f"{path}: differs from existing file (use --bless to overwrite)", file=sys.stderr)
        return False
    path.write_text(text, encoding="utf-8")
    return True


def cmd_prompts(args) -> int:
    if args.goldens:
        problems = goldens.check(args.goldens, bless=args.bless)
        for p in problems:
            print(p, file=sys.stderr)
        if not problems:
            print("goldens blessed" if args.bless else "goldens match")
        return 1 if problems else 0
    if not args.netlist or not args.out:
        print("prompts: need a netlist and --out (or --goldens DIR)", file=sys.stderr)
        return 2
    s = _session(args)
    g = GuidanceConfig(Path(args.guidance).read_text()) if args.guidance else GuidanceConfig()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "topology.txt": netlist_topology_prompt(s.netlist, s.current, s.score),
        "system_prompt.txt": system_guidance(g),
    }
    if s.layout is not None:
        files["layout.txt"] = physical_layout_prompt(s.layout)
    if s.routability is not None:
        files["routability.txt"] = routability_prompt(s.routability)
    ok = all([_write_guarded(out / name, text, args.bless) for name, text in sorted(files.items())])
    return 0 if ok else 1


def _sa_config(args) -> SAConfig:
    cfg = SAConfig.from_dict(json.loads(Path(args.config).read_text())) if args.config else SAConfig()
    overrides = {
        "total_iterations": args.iterations,
        "k_max": args.k_max,
        "seed": args.seed,
        "initial_temperature": args.temperature,
    }
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


def cmd_sa(args) -> int:
    s = _session(args)
    cfg = _sa_config(args)
    res = run_sa(s, cfg)
    print(json.dumps(res.summary, indent=2))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trace.json").write_text(json.dumps(res.summary, indent=2) + "\n")
        (out / "constraints.json").write_text(dumps_constraints(res.best_constraints) + "\n")
        write_log(out / "log.jsonl", s, res.log)
    else:
        print(dumps_constraints(res.best_constraints))
    return 0


def _agent_config(args) -> AgentConfig:
    base = json.loads(Path(args.config).read_text()) if args.config else {}
    overrides = {
        "backend": args.backend,
        "transcript": args.transcript,
        "endpoint": args.endpoint,
        "model": args.model,
        "max_iterations": args.max_iterations,
        "llm_temperature": args.llm_temperature,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    return AgentConfig(**base)


def cmd_agent(args) -> int:
    s = _session(args)
    cfg = _agent_config(args)
    g = GuidanceConfig(Path(args.guidance).read_text()) if args.guidance else GuidanceConfig()
    trace = run_agent(s, cfg, g)
    text = dumps_trace(trace)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trace.json").write_text(text)
        write_log(out / "log.jsonl", s, trace.log)
        if trace.result is not None:
            (out / "constraints.json").write_text(dumps_constraints(trace.result[0]) + "\n")
    print(f"outcome: {trace.outcome} after {len(trace.steps)} steps")
    if trace.result is not None:
        print(f"score: {format_score(trace.result[1])}")
    return 0 if trace.outcome == "final_answer" else 1


def cmd_batch(args) -> int:
    d = json.loads(Path(args.config).read_text()) if args.config else {}
    for key in ("netlist", "constraints", "layout", "routability", "mode", "runs", "jobs", "out", "guidance"):
        v = getattr(args, key)
        if v is not None:
            d[key] = v
    if args.seed is not None:
        d.setdefault("sa", {})["seed"] = args.seed
    if args.transcript:
        d["transcripts"] = args.transcript
    if args.metrics:
        d["metrics"] = dict(m.split("=", 1) for m in args.metrics)
    try:
        cfg = RunConfig.from_dict(d)
    except (TypeError, ValueError) as exc:
        print(f"batch: {exc}", file=sys.stderr)
        return 2
    report, code = run_batch(cfg)
    print(json.dumps({k: v for k, v in report.items() if k != "runs"}, indent=2))
    if code:
        print("batch: no run produced valid constraints", file=sys.stderr)
    return code


def cmd_replay(args) -> int:
    verdict = replay(args.path)
    print(verdict)
    return 0 if verdict.ok else 1


def cmd_tools(args) -> int:
    if args.list:
        print(json.dumps(list_tools(), indent=2))
        return 0
    if not args.tool:
        print("tools: give a tool name or --list", file=sys.stderr)
        return 2
    s = _session(args)
    call = ToolCall(args.tool, json.loads(args.arguments))
    _, obs = invoke(s, call)
    print(obs.text)
    return 0 if obs.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cellclust", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score cluster constraints")
    p.add_argument("netlist")
    p.add_argument("constraints", nargs="?")
    p.add_argument("--exclude-net", action="append", help="net left out of the score")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("prompts", help="render prompt documents or check goldens")
    p.add_argument("netlist", nargs="?")
    p.add_argument("--constraints")
    p.add_argument("--layout")
    p.add_argument("--routability")
    p.add_argument("--guidance", help="file replacing the built-in guidance text")
    p.add_argument("--out")
    p.add_argument("--goldens", help="golden corpus directory with manifest.json")
    p.add_argument("--bless", action="store_true", help="overwrite differing files")
    p.set_defaults(func=cmd_prompts)

    p = sub.add_parser("sa", help="one simulated-annealing run")
    _session_args(p)
    p.add_argument("--config", help="SA config JSON")
    p.add_argument("--iterations", type=int)
    p.add_argument("--k-max", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--temperature", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sa)

    p = sub.add_parser("agent", help="one ReAct agent run")
    _session_args(p)
    p.add_argument("--config", help="agent config JSON")
    p.add_argument("--backend", choices=["scripted", "http"])
    p.add_argument("--transcript")
    p.add_argument("--endpoint")
    p.add_argument("--model")
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--llm-temperature", type=float)
    p.add_argument("--guidance")
    p.add_argument("--out")
    p.set_defaults(func=cmd_agent)

    p = sub.add_parser("batch", help="independent runs plus a report")
    p.add_argument("--config", help="run config JSON; flags override it")
    p.add_argument("--netlist")
    p.add_argument("--constraints")
    p.add_argument("--layout")
    p.add_argument("--routability")
    p.add_argument("--mode", choices=["sa", "agent"])
    p.add_argument("--runs", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--guidance")
    p.add_argument("--transcript", action="append", help="scripted transcript, one per run")
    p.add_argument("--metrics", action="append", metavar="RUN=PATH")
    p.add_argument("--out")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("replay", help="verify a session log or agent trace")
    p.add_argument("path")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("tools", help="invoke one netlist tool")
    p.add_argument("netlist", nargs="?")
    p.add_argument("tool", nargs="?")
    p.add_argument("arguments", nargs="?", default="{}")
    p.add_argument("--constraints")
    p.add_argument("--layout")
    p.add_argument("--routability")
    p.add_argument("--list", action="store_true")
    p.set_defaults(func=cmd_tools)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ConstraintError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
