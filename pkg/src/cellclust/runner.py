"""Single runs, batches of independent runs, and log/trace replay.

Batch output layout::

    <out>/run_<i>/trace.json        SA summary or agent trace
    <out>/run_<i>/constraints.json  Final Answer blob, consumed by the layout tool
    <out>/run_<i>/log.jsonl         header line, then one record per tool call
    <out>/report.json
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .agent import (
    AgentConfig,
    ScriptedBackend,
    run_agent,
    trace_to_dict,
)
from .cluster import ClusterConstraints, dumps_constraints, read_constraints
from .layout import parse_layout, parse_metrics, parse_routability
from .netlist import parse_netlist, serialize_netlist
from .optimize import SAConfig, run_sa
from .prompts import GuidanceConfig
from .tools import Session, ToolCall, invoke, log_record

__all__ = [
    "RunConfig",
    "load_session",
    "improvement_ratio",
    "run_batch",
    "write_log",
    "replay_log",
    "replay_trace",
    "replay",
]

log = logging.getLogger(__name__)

EPS = 1e-9


@dataclass(frozen=True)
class RunConfig:
    netlist: str
    out: str
    constraints: str | None = None
    layout: str | None = None
    routability: str | None = None
    mode: str = "sa"
    runs: int = 10
    jobs: int = 1
    sa: SAConfig = field(default_factory=SAConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    transcripts: tuple[str, ...] = ()
    guidance: str | None = None
    metrics: dict[int, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mode not in ("sa", "agent"):
            raise ValueError(f"mode must be 'sa' or 'agent', not {self.mode!r}")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        for p in (self.netlist, self.constraints, self.layout, self.routability, *self.transcripts):
            if p is not None and not Path(p).is_file():
                raise ValueError(f"no such file: {p}")
        if self.mode == "agent" and self.agent.backend == "scripted":
            if len(self.transcripts) < self.runs:
                raise ValueError(
                    f"scripted agent batch needs {self.runs} transcripts, got {len(self.transcripts)}"
                )

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunConfig":
        d = dict(d)
        if "sa" in d and not isinstance(d["sa"], SAConfig):
            d["sa"] = SAConfig.from_dict(d["sa"])
        if "agent" in d and not isinstance(d["agent"], AgentConfig):
            d["agent"] = AgentConfig(**d["agent"])
        if "transcripts" in d:
            d["transcripts"] = tuple(d["transcripts"])
        if "metrics" in d:
            d["metrics"] = {int(k): v for k, v in d["metrics"].items()}
        return cls(**d)


def _read(path: str | None) -> str | None:
    return None if path is None else Path(path).read_text(encoding="utf-8")


def load_session(
    netlist: str,
    constraints: str | None = None,
    layout: str | None = None,
    routability: str | None = None,
) -> Session:
    n = parse_netlist(_read(netlist))
    cc = read_constraints(constraints) if constraints else ClusterConstraints()
    lay = parse_layout(_read(layout), n) if layout else None
    rep = parse_routability(_read(routability), n) if routability else None
    return Session.start(n, cc, lay, rep)


def improvement_ratio(initial: float, best: float) -> float:
    return round((best - initial) / max(initial, EPS), 4)


def _header(s: Session, **extra) -> dict[str, Any]:
    return {
        "header": {
            "netlist": serialize_netlist(s.netlist),
            "initial": s.history[0].constraints.to_dict(),
            **extra,
        }
    }


def write_log(path: Path, s: Session, records, **extra) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(_header(s, **extra)) + "\n")
        for rec in records:
            f.write(json.dumps(rec) + "\n")


def _write_run(rundir: Path, session: Session, trace: dict, result, records) -> str | None:
    rundir.mkdir(parents=True, exist_ok=True)
    (rundir / "trace.json").write_text(json.dumps(trace, indent=2) + "\n", encoding="utf-8")
    write_log(rundir / "log.jsonl", session, records)
    if result is None:
        return None
    path = rundir / "constraints.json"
    path.write_text(dumps_constraints(result) + "\n", encoding="utf-8")
    return str(path)


def _sa_run(cfg: RunConfig, i: int) -> dict[str, Any]:
    session = load_session(cfg.netlist, cfg.constraints, cfg.layout, cfg.routability)
    sa = replace(cfg.sa, seed=cfg.sa.seed + i)
    res = run_sa(session, sa)
    path = _write_run(Path(cfg.out) / f"run_{i}", session, res.summary, res.best_constraints, res.log)
    return {
        "run": i,
        "seed": sa.seed,
        "outcome": "completed",
        "valid": True,
        "final_score": float(res.best_score),
        "constraints_path": path,
    }


def _agent_run(cfg: RunConfig, i: int) -> dict[str, Any]:
    session = load_session(cfg.netlist, cfg.constraints, cfg.layout, cfg.routability)
    guidance = GuidanceConfig(_read(cfg.guidance)) if cfg.guidance else GuidanceConfig()
    backend = None
    transcript = None
    if cfg.agent.backend == "scripted":
        transcript = cfg.transcripts[i]
        backend = ScriptedBackend.from_file(transcript)
    trace = run_agent(session, cfg.agent, guidance, backend)
    result = trace.result if trace.outcome != "backend_error" else None
    doc = _header(session, max_iterations=cfg.agent.max_iterations) | trace_to_dict(trace)
    path = _write_run(
        Path(cfg.out) / f"run_{i}",
        session,
        doc,
        result[0] if result else None,
        trace.log,
    )
    return {
        "run": i,
        "transcript": transcript,
        "outcome": trace.outcome,
        "valid": result is not None,
        "final_score": result[1] if result else None,
        "constraints_path": path,
    }


def run_batch(cfg: RunConfig) -> tuple[dict[str, Any], int]:
    """Run every configured run, write artifacts, return (report, exit code)."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    initial = load_session(cfg.netlist, cfg.constraints, cfg.layout, cfg.routability)
    work = _sa_run if cfg.mode == "sa" else _agent_run
    if cfg.jobs == 1:
        runs = [work(cfg, i) for i in range(cfg.runs)]
    else:
        pool = ProcessPoolExecutor if cfg.mode == "sa" else ThreadPoolExecutor
        with pool(max_workers=cfg.jobs) as ex:
            runs = list(ex.map(work, [cfg] * cfg.runs, range(cfg.runs)))

    for r in runs:
        if r["run"] in cfg.metrics:
            r["metrics"] = parse_metrics(_read(cfg.metrics[r["run"]])).to_dict()

    initial_score = float(initial.score.total)
    valid = [r for r in runs if r["valid"]]
    best = max(valid, key=lambda r: r["final_score"], default=None)  # first max wins
    report = {
        "mode": cfg.mode,
        "runs": runs,
        "best_run": None if best is None else best["run"],
        "initial_score": initial_score,
        "best_score": None if best is None else best["final_score"],
        "improvement_ratio": None
        if best is None
        else improvement_ratio(initial_score, best["final_score"]),
    }
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    return report, 0 if best is not None else 1


def _read_log(path) -> tuple[dict | None, list[dict]]:
    header, records = None, []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            if "header" in rec:
                header = rec["header"]
            else:
                records.append(rec)
    return header, records


def _session_from_header(header: dict) -> Session:
    n = parse_netlist(header["netlist"])
    return Session.start(n, ClusterConstraints.of(header.get("initial") or {}))


@dataclass(frozen=True)
class Verdict:
    ok: bool
    step: int | None = None
    detail: str = ""

    def __str__(self) -> str:
        if self.ok:
            return "PASS"
        return f"FAIL at step {self.step}: {self.detail}"


def replay_log(path, session: Session | None = None) -> Verdict:
    header, records = _read_log(path)
    if session is None:
        if header is None:
            return Verdict(False, 0, "log has no header and no session was supplied")
        session = _session_from_header(header)
    s = session
    for k, rec in enumerate(records, start=1):
        call = ToolCall(rec["tool"], rec.get("arguments", {}))
        s, obs = invoke(s, call)
        fresh = log_record(call, obs, s)
        for key in ("ok", "observation", "score_after"):
            if fresh[key] != rec.get(key):
                return Verdict(
                    False, k, f"{key} differs: recorded {rec.get(key)!r}, replayed {fresh[key]!r}"
                )
    return Verdict(True)


def replay_trace(path) -> Verdict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    header = doc.get("header")
    if header is None:
        return Verdict(False, 0, "trace has no session header")
    session = _session_from_header(header)
    responses = [st["response"] for st in doc["steps"]]
    if not responses:
        return Verdict(False, 0, "trace has no steps to replay")
    cfg = AgentConfig(max_iterations=header.get("max_iterations", 15))
    fresh = trace_to_dict(run_agent(session, cfg, backend=ScriptedBackend(responses)))
    recorded = {k: v for k, v in doc.items() if k != "header"}
    for k, (a, b) in enumerate(zip(recorded["steps"], fresh["steps"]), start=1):
        if a != b:
            return Verdict(False, k, f"recorded {a!r}, replayed {b!r}")
    if len(recorded["steps"]) != len(fresh["steps"]):
        return Verdict(False, min(len(recorded["steps"]), len(fresh["steps"])) + 1, "step count differs")
    for key in recorded:
        if key != "steps" and recorded[key] != fresh.get(key):
            if key == "error" and recorded["outcome"] == "backend_error":
                continue
            return Verdict(False, len(fresh["steps"]), f"{key} differs")
    return Verdict(True)


def replay(path) -> Verdict:
    p = Path(path)
    if p.suffix == ".json":
        return replay_trace(p)
    return replay_log(p)
