# %% [markdown]
# # Prompt documents
#
# Every text the model sees is rendered deterministically from the netlist,
# the current constraints, the layout grid and the routability report.

# %%
from pathlib import Path

from cellclust import Session, read_netlist
from cellclust.layout import diffusion_break_adjacent_nets, parse_layout, parse_routability
from cellclust.prompts import netlist_topology_prompt, physical_layout_prompt, routability_prompt

FIX = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

inv = read_netlist(FIX / "inv.sp")
layout = parse_layout((FIX / "toy_layout.json").read_text(), inv)
s = Session.start(inv, {"c1": ["mp1", "mn1"]}, layout)
print(netlist_topology_prompt(s.netlist, s.current, s.score))
print(physical_layout_prompt(layout))

# %% [markdown]
# Source/drain sites next to an empty (dummy) column mark diffusion breaks.

# %%
wide = parse_layout({"columns": 4, "rows": 1, "sites": [
    {"x": 0, "y": 0, "net": "VDD", "device": "mp1", "terminal": "s"},
    {"x": 1, "y": 0, "net": "A", "device": "mp1", "terminal": "g"},
    {"x": 2, "y": 0, "net": "OUT", "device": "mp1", "terminal": "d"},
]}, inv)
print(diffusion_break_adjacent_nets(wide))

# %%
report = parse_routability((FIX / "seq_routability.json").read_text())
print(routability_prompt(report))
