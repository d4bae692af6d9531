"""Device cluster constraint optimisation for standard cell layouts."""

from .cluster import (
    ClusterConstraints,
    ScoreBreakdown,
    ValidationReport,
    cluster_score,
    format_score,
    merge_cluster,
    read_constraints,
    shared_net_count,
    validate_constraints,
)
from .layout import Layout, RoutabilityReport, parse_layout, parse_routability
from .netlist import (
    Kind,
    Mosfet,
    Netlist,
    devices_on_nets,
    net_statistics,
    parse_netlist,
    read_netlist,
    serialize_netlist,
)
from .optimize import SAConfig, run_sa
from .agent import AgentConfig, run_agent
from .tools import Session, ToolCall, invoke, list_tools

__version__ = "0.1.0"
