"""Simulated-annealing baseline over the save-cluster move.

Each step samples 1..k nets (weighted toward unrouted nets and nets beside a
diffusion break), groups the devices on them, and proposes saving that group
as a new cluster. Acceptance is Metropolis on the change in cluster score,
and the temperature follows a modified Lam schedule that steers the running
acceptance rate toward a target curve instead of a fixed cooling law.

Random numbers come from numpy's PCG64 seeded through ``SeedSequence(seed)``.
Run ``i`` of a batch uses ``seed + i``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from typing import Any, Mapping

import numpy as np

from .cluster import ClusterConstraints, MergeError, ConstraintError, cluster_score, merge_cluster
from .layout import Layout, RoutabilityReport, diffusion_break_adjacent_nets
from .netlist import Netlist, NetlistError, devices_on_nets
from .tools import (
    GET_BEST_CLUSTER_RESULT,
    SAVE_POTENTIAL_CLUSTER,
    Session,
    ToolCall,
    invoke,
    log_record,
)

__all__ = [
    "SAConfig",
    "SAState",
    "SAResult",
    "make_rng",
    "net_weights",
    "sample_nets",
    "lam_target",
    "metropolis",
    "lam_update",
    "sa_step",
    "run_sa",
]

# modified Lam constants
LAM_PLATEAU = 0.44
LAM_EARLY_END = 0.15
LAM_LATE_START = 0.65
RATE_WINDOW = 500
TEMP_FACTOR = 0.999


@dataclass(frozen=True)
class SAConfig:
    total_iterations: int = 2000
    k_max: int = 3
    weight_unrouted: float = 4.0
    weight_diffusion_break: float = 2.0
    initial_temperature: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.total_iterations <= 0:
            raise ValueError("total_iterations must be > 0")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.weight_unrouted < 1 or self.weight_diffusion_break < 1:
            raise ValueError("net weights must be >= 1")
        if not self.initial_temperature > 0:
            raise ValueError("initial_temperature must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SAConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown SA config keys: {', '.join(sorted(unknown))}")
        return cls(**d)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def net_weights(
    n: Netlist,
    layout: Layout | None = None,
    report: RoutabilityReport | None = None,
    cfg: SAConfig | None = None,
) -> dict[str, float]:
    cfg = cfg or SAConfig()
    unrouted = set(report.nets) if report is not None else set()
    breaks = diffusion_break_adjacent_nets(layout) if layout is not None else set()
    weights = {}
    for net in n.nets:
        if net in unrouted:
            weights[net] = cfg.weight_unrouted
        elif net in breaks:
            weights[net] = cfg.weight_diffusion_break
        else:
            weights[net] = 1.0
    return weights


def sample_nets(weights: Mapping[str, float], j: int, rng: np.random.Generator) -> list[str]:
    """Draw ``j`` distinct nets, each draw proportional to weight."""
    pool = list(weights.items())
    picked = []
    for _ in range(min(j, len(pool))):
        total = sum(w for _, w in pool)
        r = rng.random() * total
        acc = 0.0
        for i, (net, w) in enumerate(pool):
            acc += w
            if r < acc:
                break
        picked.append(net)
        del pool[i]
    return picked


def lam_target(iteration: int, total: int) -> float:
    if not 0 <= iteration < total:
        raise ValueError(f"iteration {iteration} outside [0, {total})")
    p = iteration / total
    if p < LAM_EARLY_END:
        return LAM_PLATEAU + (1 - LAM_PLATEAU) * 560 ** (-p / LAM_EARLY_END)
    if p <= LAM_LATE_START:
        return LAM_PLATEAU
    return LAM_PLATEAU * 440 ** (-(p - LAM_LATE_START) / (1 - LAM_LATE_START))


def metropolis(delta: float, temperature: float, rng: np.random.Generator) -> bool:
    # maximising: improvements and ties always pass
    if delta >= 0:
        return True
    return rng.random() < math.exp(delta / temperature)


def lam_update(
    temperature: float, rate: float, accepted: bool, iteration: int, total: int
) -> tuple[float, float]:
    rate = ((RATE_WINDOW - 1) * rate + (1.0 if accepted else 0.0)) / RATE_WINDOW
    if rate > lam_target(iteration, total):
        temperature *= TEMP_FACTOR
    else:
        temperature /= TEMP_FACTOR
    return temperature, rate


@dataclass(frozen=True)
class SAState:
    session: Session
    temperature: float
    iteration: int = 0
    accept_rate_estimate: float = 0.5
    best_score: Fraction = Fraction(0)
    best_iteration: int = 0
    accepted: int = 0
    rejected: int = 0
    log: tuple[dict, ...] = field(default=(), repr=False)

    @classmethod
    def start(cls, session: Session, cfg: SAConfig) -> "SAState":
        return cls(
            session=session,
            temperature=cfg.initial_temperature,
            best_score=session.best().score.total,
        )


def sa_step(
    st: SAState, weights: Mapping[str, float], cfg: SAConfig, rng: np.random.Generator
) -> SAState:
    s = st.session
    j = int(rng.integers(1, cfg.k_max + 1))
    nets = sample_nets(weights, j, rng)
    accepted = False
    try:
        members = devices_on_nets(s.netlist, nets)
        candidate = merge_cluster(s.netlist, s.current, members)
    except (MergeError, NetlistError, ConstraintError):
        candidate = None
    if candidate is not None:
        delta = float(cluster_score(s.netlist, candidate).total - s.score.total)
        accepted = metropolis(delta, st.temperature, rng)

    log = st.log
    best, best_it = st.best_score, st.best_iteration
    if accepted:
        call = ToolCall(SAVE_POTENTIAL_CLUSTER, {"devices": members})
        s, obs = invoke(s, call)
        assert obs.ok, obs.text
        log = log + (log_record(call, obs, s),)
        if s.score.total > best:
            best, best_it = s.score.total, st.iteration + 1

    temperature, rate = lam_update(
        st.temperature, st.accept_rate_estimate, accepted, st.iteration, cfg.total_iterations
    )
    return replace(
        st,
        session=s,
        iteration=st.iteration + 1,
        temperature=temperature,
        accept_rate_estimate=rate,
        best_score=best,
        best_iteration=best_it,
        accepted=st.accepted + accepted,
        rejected=st.rejected + (not accepted),
        log=log,
    )


@dataclass(frozen=True)
class SAResult:
    best_constraints: ClusterConstraints
    best_score: Fraction
    summary: dict[str, Any]
    session: Session
    log: tuple[dict, ...]


def run_sa(
    session: Session,
    cfg: SAConfig,
    layout: Layout | None = None,
    report: RoutabilityReport | None = None,
) -> SAResult:
    layout = layout if layout is not None else session.layout
    report = report if report is not None else session.routability
    weights = net_weights(session.netlist, layout, report, cfg)
    rng = make_rng(cfg.seed)
    st = SAState.start(session, cfg)
    for _ in range(cfg.total_iterations):
        st = sa_step(st, weights, cfg, rng)

    call = ToolCall(GET_BEST_CLUSTER_RESULT, {})
    final, obs = invoke(st.session, call)
    log = st.log + (log_record(call, obs, final),)
    summary = {
        "iterations": st.iteration,
        "accepted": st.accepted,
        "rejected": st.rejected,
        "best_score": float(final.score.total),
        "best_iteration": st.best_iteration,
        "seed": cfg.seed,
    }
    return SAResult(final.current, final.score.total, summary, final, log)
