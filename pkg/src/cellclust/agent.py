"""ReAct loop: the model writes a Thought and a JSON action blob, a tool runs,
and its output is fed back as an Observation until a Final Answer is given
or the iteration cap is hit.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol, Sequence

import httpx

from .cluster import ClusterConstraints, cluster_score, validate_constraints
from .prompts import (
    GuidanceConfig,
    netlist_topology_prompt,
    physical_layout_prompt,
    routability_prompt,
    system_guidance,
)
from .tools import (
    TOOL_NAMES,
    Observation,
    Session,
    ToolArgumentError,
    ToolCall,
    check_arguments,
    invoke,
    log_record,
)

__all__ = [
    "API_KEY_ENV",
    "FINAL_ANSWER",
    "AgentConfig",
    "FinalAnswer",
    "ParseError",
    "AgentStep",
    "AgentTrace",
    "Backend",
    "BackendError",
    "ScriptedBackend",
    "HttpBackend",
    "scripted_backend",
    "build_initial_prompt",
    "parse_action",
    "run_agent",
    "trace_to_dict",
    "dumps_trace",
]

log = logging.getLogger(__name__)

API_KEY_ENV = "CELLCLUST_LLM_API_KEY"
FINAL_ANSWER = "Final Answer"


@dataclass(frozen=True)
class AgentConfig:
    max_iterations: int = 15
    llm_temperature: float = 0.1
    backend: str = "scripted"  # "scripted" | "http"
    endpoint: str | None = None
    model: str | None = None
    transcript: str | None = None
    stop_sequences: tuple[str, ...] = ("Observation:",)

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.backend not in ("scripted", "http"):
            raise ValueError(f"unknown backend {self.backend!r}")
        object.__setattr__(self, "stop_sequences", tuple(self.stop_sequences))


class BackendError(RuntimeError):
    pass


class Backend(Protocol):
    def __call__(
        self, messages: list[dict[str, str]], *, temperature: float, stop: Sequence[str]
    ) -> str: ...


class ScriptedBackend:
    """Replays canned responses in order; safe to share between threads."""

    def __init__(self, responses: Sequence[str]):
        if not responses:
            raise ValueError("transcript is empty")
        self.responses = list(responses)
        self._next = 0
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path) -> "ScriptedBackend":
        """JSON lines; each line is a string or an object with ``content``."""
        responses = []
        with open(path, encoding="utf-8") as f:
            for line in f:
                if not line.strip():
                    continue
                rec = json.loads(line)
                responses.append(rec if isinstance(rec, str) else rec["content"])
        return cls(responses)

    def __call__(self, messages, *, temperature=0.0, stop=()) -> str:
        with self._lock:
            if self._next >= len(self.responses):
                raise BackendError(
                    f"scripted transcript exhausted after {len(self.responses)} responses"
                )
            out = self.responses[self._next]
            self._next += 1
            return out


def scripted_backend(transcript: Sequence[str]) -> ScriptedBackend:
    return ScriptedBackend(transcript)


class HttpBackend:
    """OpenAI-compatible chat-completions client with bounded retries."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        *,
        attempts: int = 3,
        backoff: float = 1.0,
        timeout: float = 120.0,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.attempts = attempts
        self.backoff = backoff
        self.client = client or httpx.Client(timeout=timeout)
        self.sleep = sleep

    def __call__(self, messages, *, temperature=0.1, stop=()) -> str:
        body = {
            "model": self.model,
            "messages": messages,
            "temperature": temperature,
            "stop": list(stop),
        }
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        last = None
        for attempt in range(self.attempts):
            if attempt:
                self.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self.client.post(self.endpoint, json=body, headers=headers)
            except httpx.TransportError as exc:
                last = f"transport error: {exc}"
                log.warning("chat completion attempt %d failed: %s", attempt + 1, last)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = f"HTTP {resp.status_code}: {resp.text[:200]}"
                log.warning("chat completion attempt %d failed: %s", attempt + 1, last)
                continue
            if resp.status_code >= 400:
                raise BackendError(f"HTTP {resp.status_code}: {resp.text[:500]}")
            try:
                return resp.json()["choices"][0]["message"]["content"] or ""
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise BackendError(f"malformed completion response: {exc}") from None
        raise BackendError(f"backend failed after {self.attempts} attempts: {last}")


@dataclass(frozen=True)
class FinalAnswer:
    constraints: ClusterConstraints


@dataclass(frozen=True)
class ParseError:
    message: str


@dataclass(frozen=True)
class AgentStep:
    thought: str
    action: ToolCall | FinalAnswer | ParseError
    observation: Observation | None
    response: str = ""


@dataclass(frozen=True)
class AgentTrace:
    steps: tuple[AgentStep, ...]
    outcome: str  # final_answer | iteration_cap | backend_error
    final_constraints: ClusterConstraints | None = None
    final_score: float | None = None
    fallback_constraints: ClusterConstraints | None = None
    fallback_score: float | None = None
    error: str | None = None
    log: tuple[dict, ...] = field(default=(), repr=False)

    @property
    def result(self) -> tuple[ClusterConstraints, float] | None:
        """The run's reported clusters: the final answer, else best-of-history."""
        if self.final_constraints is not None:
            return self.final_constraints, self.final_score
        if self.fallback_constraints is not None:
            return self.fallback_constraints, self.fallback_score
        return None


def build_initial_prompt(s: Session, g: GuidanceConfig | None = None) -> str:
    parts = [
        system_guidance(g),
        netlist_topology_prompt(s.netlist, s.current, s.score),
    ]
    if s.layout is not None:
        parts.append(physical_layout_prompt(s.layout))
    if s.routability is not None:
        parts.append(routability_prompt(s.routability))
    parts.append(
        "Improve the cluster constraints above using the tools "
        f"({', '.join(TOOL_NAMES)}) and finish with a Final Answer.\n"
        "Begin! Always start with a Thought.\n"
    )
    return "\n".join(parts)


_FENCE = re.compile(r"```[a-zA-Z]*\s*$")
_NO_BLOB = (
    "no action blob found; respond with a JSON blob containing action and action_input"
)


def _find_blob(text: str) -> tuple[int, dict] | None:
    decoder = json.JSONDecoder()
    found = None
    i = text.find("{")
    while i != -1:
        try:
            obj, end = decoder.raw_decode(text, i)
        except json.JSONDecodeError:
            i = text.find("{", i + 1)
            continue
        if isinstance(obj, dict) and "action" in obj and "action_input" in obj:
            found = (i, obj)
            i = text.find("{", end)
        else:
            i = text.find("{", i + 1)
    return found


def _thought(prefix: str) -> str:
    lines = prefix.rstrip().splitlines()
    while lines and (_FENCE.match(lines[-1].strip()) or lines[-1].strip() in ("Action:", "")):
        lines.pop()
    text = "\n".join(lines).strip()
    if text.startswith("Thought:"):
        text = text[len("Thought:"):].strip()
    return text


def parse_action(text: str) -> tuple[str, ToolCall | FinalAnswer | ParseError]:
    """Return ``(thought, action)`` for one model response."""
    hit = _find_blob(text)
    if hit is None:
        return _thought(text), ParseError(_NO_BLOB)
    start, blob = hit
    thought = _thought(text[:start])
    action, args = blob["action"], blob["action_input"]
    if isinstance(args, str):
        try:
            args = json.loads(args)
        except json.JSONDecodeError:
            pass
    if action == FINAL_ANSWER:
        if not isinstance(args, dict) or not all(
            isinstance(v, list) and all(isinstance(d, str) for d in v) for v in args.values()
        ):
            return thought, ParseError(
                "Final Answer action_input must map cluster names to lists of device names"
            )
        return thought, FinalAnswer(ClusterConstraints.of(args))
    if action not in TOOL_NAMES:
        return thought, ParseError(
            f"unknown action {action!r}; valid actions: {', '.join(TOOL_NAMES)}, {FINAL_ANSWER}"
        )
    if args is None:
        args = {}
    try:
        check_arguments(action, args)
    except ToolArgumentError as exc:
        return thought, ParseError(str(exc))
    return thought, ToolCall(action, args)


def run_agent(
    s: Session,
    cfg: AgentConfig,
    g: GuidanceConfig | None = None,
    backend: Backend | None = None,
) -> AgentTrace:
    if backend is None:
        backend = _backend_from_config(cfg)
    messages = [{"role": "user", "content": build_initial_prompt(s, g)}]
    steps: list[AgentStep] = []
    records: list[dict] = []

    def fallback(outcome: str, error: str | None = None) -> AgentTrace:
        best = s.best()
        return AgentTrace(
            tuple(steps),
            outcome,
            fallback_constraints=best.constraints,
            fallback_score=float(best.score.total),
            error=error,
            log=tuple(records),
        )

    for _ in range(cfg.max_iterations):
        try:
            response = backend(messages, temperature=cfg.llm_temperature, stop=cfg.stop_sequences)
        except BackendError as exc:
            log.error("agent stopped: %s", exc)
            return fallback("backend_error", str(exc))
        messages.append({"role": "assistant", "content": response})
        thought, action = parse_action(response)

        if isinstance(action, FinalAnswer):
            report = validate_constraints(s.netlist, action.constraints)
            if report.valid:
                steps.append(AgentStep(thought, action, None, response))
                score = cluster_score(s.netlist, action.constraints)
                return AgentTrace(
                    tuple(steps),
                    "final_answer",
                    final_constraints=action.constraints,
                    final_score=float(score.total),
                    log=tuple(records),
                )
            obs = Observation(f"Error: {report}", ok=False)
        elif isinstance(action, ParseError):
            obs = Observation(f"Error: {action.message}", ok=False)
        else:
            s, obs = invoke(s, action)
            records.append(log_record(action, obs, s))
        steps.append(AgentStep(thought, action, obs, response))
        messages.append({"role": "user", "content": f"Observation: {obs.text}"})

    return fallback("iteration_cap")


def _backend_from_config(cfg: AgentConfig) -> Backend:
    if cfg.backend == "scripted":
        if not cfg.transcript:
            raise ValueError("scripted backend needs a transcript path")
        return ScriptedBackend.from_file(cfg.transcript)
    if not cfg.endpoint or not cfg.model:
        raise ValueError("http backend needs endpoint and model")
    return HttpBackend(cfg.endpoint, cfg.model)


def _action_dict(action) -> dict[str, Any]:
    if isinstance(action, FinalAnswer):
        return {"action": FINAL_ANSWER, "action_input": action.constraints.to_dict()}
    if isinstance(action, ParseError):
        return {"parse_error": action.message}
    return {"action": action.tool, "action_input": json.loads(json.dumps(action.arguments))}


def trace_to_dict(trace: AgentTrace) -> dict[str, Any]:
    def cc(x):
        return None if x is None else x.to_dict()

    return {
        "outcome": trace.outcome,
        "final_constraints": cc(trace.final_constraints),
        "final_score": trace.final_score,
        "fallback_constraints": cc(trace.fallback_constraints),
        "fallback_score": trace.fallback_score,
        "error": trace.error,
        "steps": [
            {
                "thought": st.thought,
                "action": _action_dict(st.action),
                "observation": None
                if st.observation is None
                else {"text": st.observation.text, "ok": st.observation.ok},
                "response": st.response,
            }
            for st in trace.steps
        ],
    }


def dumps_trace(trace: AgentTrace) -> str:
    return json.dumps(trace_to_dict(trace), indent=2) + "\n"
