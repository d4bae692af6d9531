import json

import httpx
import pytest

from cellclust.agent import (
    API_KEY_ENV,
    AgentConfig,
    BackendError,
    FinalAnswer,
    HttpBackend,
    ParseError,
    ScriptedBackend,
    build_initial_prompt,
    dumps_trace,
    parse_action,
    run_agent,
)
from cellclust.cluster import ClusterConstraints
from cellclust.layout import parse_routability
from cellclust.tools import Session, ToolCall


def test_parse_tool_call():
    text = 'Thought: look at NET027\n{"action": "get_group_devices_from_nets", "action_input": {"nets": ["NET027"]}}'
    thought, action = parse_action(text)
    assert thought == "look at NET027"
    assert action == ToolCall("get_group_devices_from_nets", {"nets": ["NET027"]})


def test_parse_fenced_blob():
    text = (
        "Thought: save them\nAction:\n```json\n"
        '{"action": "save_potential_cluster", "action_input": {"devices": ["mp1"]}}\n```\n'
    )
    thought, action = parse_action(text)
    assert thought == "save them"
    assert action == ToolCall("save_potential_cluster", {"devices": ["mp1"]})


def test_parse_last_blob_wins():
    text = (
        '{"action": "evaluate_clusters", "action_input": {}} then '
        '{"note": 1} and {"action": "get_best_cluster_result", "action_input": {}}'
    )
    assert parse_action(text)[1] == ToolCall("get_best_cluster_result", {})


def test_parse_string_action_input():
    text = '{"action": "get_group_devices_from_nets", "action_input": "{\\"nets\\": [\\"A\\"]}"}'
    assert parse_action(text)[1] == ToolCall("get_group_devices_from_nets", {"nets": ["A"]})


def test_parse_final_answer():
    _, action = parse_action('{"action": "Final Answer", "action_input": {"c1": ["mp1", "mn1"]}}')
    assert action == FinalAnswer(ClusterConstraints.of({"c1": ["mp1", "mn1"]}))


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("I think we are done.", "no action blob found"),
        ('{"action": "delete_everything", "action_input": {}}', "valid actions:"),
        ('{"action": "save_potential_cluster", "action_input": {"devices": "mp1"}}', "invalid arguments"),
        ('{"action": "Final Answer", "action_input": ["mp1"]}', "Final Answer action_input"),
        ('{"action": "save_potential_cluster"}', "no action blob found"),
    ],
)
def test_parse_errors(text, fragment):
    _, action = parse_action(text)
    assert isinstance(action, ParseError)
    assert fragment in action.message


def _cfg(fixtures, name, **kw):
    return AgentConfig(transcript=str(fixtures / "transcripts" / name), **kw)


def test_save_then_final(nand2, fixtures):
    trace = run_agent(Session.start(nand2), _cfg(fixtures, "nand2_save_final.jsonl"))
    assert trace.outcome == "final_answer"
    assert trace.final_score == 1.25
    assert [r["tool"] for r in trace.log] == ["get_group_devices_from_nets", "save_potential_cluster"]
    assert trace.result == (trace.final_constraints, 1.25)


def test_invalid_final_answer_is_fed_back(nand2, fixtures):
    trace = run_agent(Session.start(nand2), _cfg(fixtures, "ghost_then_fixed.jsonl"))
    assert trace.outcome == "final_answer"
    first = trace.steps[0].observation
    assert not first.ok and "unknown_device: ghost in c1" in first.text
    assert trace.final_constraints == ClusterConstraints.of({"c1": ["mp1", "mn1"]})
    assert trace.final_score == 0.5


def test_iteration_cap(nand2, fixtures):
    trace = run_agent(Session.start(nand2), _cfg(fixtures, "garbage_cap.jsonl"))
    assert trace.outcome == "iteration_cap"
    assert len(trace.steps) == 15
    assert trace.final_constraints is None
    assert trace.fallback_constraints == ClusterConstraints.of({})
    assert all(not st.observation.ok for st in trace.steps)


def test_smaller_cap(nand2, fixtures):
    trace = run_agent(Session.start(nand2), _cfg(fixtures, "garbage_cap.jsonl", max_iterations=3))
    assert len(trace.steps) == 3


def test_exhaustion_is_backend_error(nand2, fixtures):
    trace = run_agent(Session.start(nand2), _cfg(fixtures, "explore_then_exhaust.jsonl"))
    assert trace.outcome == "backend_error"
    assert "exhausted" in trace.error
    # the fallback is the best snapshot seen, the saved pair
    assert trace.fallback_score == 0.5


def test_trace_is_deterministic(nand2, fixtures):
    cfg = _cfg(fixtures, "nand2_save_final.jsonl")
    a = dumps_trace(run_agent(Session.start(nand2), cfg))
    b = dumps_trace(run_agent(Session.start(nand2), cfg))
    assert a == b
    assert json.loads(a)["outcome"] == "final_answer"


def test_messages_and_stop(nand2):
    seen = []

    def backend(messages, *, temperature, stop):
        seen.append((list(messages), temperature, tuple(stop)))
        if len(seen) == 1:
            return '{"action": "evaluate_clusters", "action_input": {}}'
        return '{"action": "Final Answer", "action_input": {}}'

    s = Session.start(nand2)
    trace = run_agent(s, AgentConfig(), backend=backend)
    assert trace.outcome == "final_answer" and trace.final_score == 0.0
    first, second = seen
    assert first[0] == [{"role": "user", "content": build_initial_prompt(s)}]
    assert first[1] == 0.1 and first[2] == ("Observation:",)
    assert second[0][-1]["content"].startswith("Observation: Cluster score: 0.000")
    assert second[0][-2]["role"] == "assistant"


def test_initial_prompt_sections(nand2):
    rep = parse_routability('{"unrouted": []}')
    text = build_initial_prompt(Session.start(nand2, routability=rep))
    assert "Routability report:\nAll nets routed." in text
    assert "Physical layout" not in text
    assert text.endswith("Begin! Always start with a Thought.\n")


def test_scripted_backend_from_file(tmp_path):
    p = tmp_path / "t.jsonl"
    p.write_text('"one"\n\n{"content": "two"}\n')
    b = ScriptedBackend.from_file(p)
    assert b([]) == "one" and b([]) == "two"
    with pytest.raises(BackendError):
        b([])
    with pytest.raises(ValueError):
        ScriptedBackend([])


def _ok(content="hi"):
    return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})


def test_http_backend_request(monkeypatch):
    monkeypatch.setenv(API_KEY_ENV, "secret")
    seen = []

    def handler(request):
        seen.append(request)
        return _ok("reply")

    client = httpx.Client(transport=httpx.MockTransport(handler))
    b = HttpBackend("http://llm.test/v1/chat/completions", "m1", client=client)
    out = b([{"role": "user", "content": "x"}], temperature=0.1, stop=["Observation:"])
    assert out == "reply"
    req = seen[0]
    assert req.headers["authorization"] == "Bearer secret"
    body = json.loads(req.content)
    assert body == {
        "model": "m1",
        "messages": [{"role": "user", "content": "x"}],
        "temperature": 0.1,
        "stop": ["Observation:"],
    }


def test_http_backend_retries_then_succeeds():
    replies = iter([httpx.Response(503), httpx.Response(429), _ok("fine")])
    sleeps = []
    client = httpx.Client(transport=httpx.MockTransport(lambda r: next(replies)))
    b = HttpBackend("http://x", "m", api_key="k", client=client, sleep=sleeps.append)
    assert b([]) == "fine"
    assert sleeps == [1.0, 2.0]


def test_http_backend_gives_up():
    calls = []

    def handler(request):
        calls.append(1)
        raise httpx.ConnectError("down", request=request)

    client = httpx.Client(transport=httpx.MockTransport(handler))
    b = HttpBackend("http://x", "m", api_key="k", client=client, sleep=lambda s: None)
    with pytest.raises(BackendError, match="after 3 attempts"):
        b([])
    assert len(calls) == 3


def test_http_backend_client_error_is_immediate():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(401, text="bad key")

    client = httpx.Client(transport=httpx.MockTransport(handler))
    b = HttpBackend("http://x", "m", api_key="k", client=client, sleep=lambda s: None)
    with pytest.raises(BackendError, match="HTTP 401"):
        b([])
    assert calls == [1]


def test_http_backend_malformed():
    client = httpx.Client(transport=httpx.MockTransport(lambda r: httpx.Response(200, json={})))
    with pytest.raises(BackendError, match="malformed"):
        HttpBackend("http://x", "m", api_key="k", client=client)([])


def test_agent_config_validation():
    with pytest.raises(ValueError):
        AgentConfig(max_iterations=0)
    with pytest.raises(ValueError):
        AgentConfig(backend="carrier-pigeon")
