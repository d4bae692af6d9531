# %% [markdown]
# # A scripted ReAct run
#
# The agent loop talks to a backend that returns model text. Here the
# backend replays a canned transcript so the run is fully deterministic; an
# HTTP backend for an OpenAI-compatible endpoint is a config switch away.

# %%
from pathlib import Path

from cellclust import AgentConfig, Session, read_netlist, run_agent
from cellclust.agent import build_initial_prompt, dumps_trace

HERE = Path(__file__).resolve().parent
FIX = HERE.parent / "tests" / "fixtures"
nand2 = read_netlist(FIX / "nand2.sp")
session = Session.start(nand2)

# %%
print(build_initial_prompt(session)[-600:])

# %%
cfg = AgentConfig(transcript=str(FIX / "transcripts" / "nand2_save_final.jsonl"))
trace = run_agent(session, cfg)
for i, step in enumerate(trace.steps, 1):
    obs = step.observation.text if step.observation else "(final answer)"
    print(f"step {i}: {step.thought!r}")
    print("   ", obs.replace("\n", "\n    "))
print(trace.outcome, trace.final_score)

# %% [markdown]
# A model that never produces a usable action is stopped at the iteration
# cap, and the best snapshot seen so far is reported instead.

# %%
cap = run_agent(session, AgentConfig(transcript=str(FIX / "transcripts" / "garbage_cap.jsonl")))
print(cap.outcome, len(cap.steps), cap.fallback_score)

# %%
print(dumps_trace(trace)[:400])
