# %% [markdown]
# # Scoring cluster constraints
#
# A cluster score rewards diffusion sharing and common gates inside each
# cluster, normalised by cluster size. We build a 2-input NAND by hand and
# compare two ways of grouping its four transistors.

# %%
from pathlib import Path

from cellclust import cluster_score, format_score, parse_netlist, validate_constraints

HERE = Path(__file__).resolve().parent
nand2 = parse_netlist((HERE.parent / "tests" / "fixtures" / "nand2.sp").read_text())
for m in nand2.devices:
    print(m.name, m.kind.value, "d=", m.drain, "g=", m.gate, "s=", m.source)

# %% [markdown]
# One big cluster: the PMOS pair shares VDD and OUT, the NMOS stack shares
# net1, and both gate nets drive one PMOS and one NMOS.

# %%
one = {"c1": ["mp1", "mp2", "mn1", "mn2"]}
sb = cluster_score(nand2, one)
c = sb.per_cluster["c1"]
print(c.diffusion_pairs, c.common_gates, c.t_c, format_score(sb.total))

# %%
two = {"c1": ["mp1", "mn1"], "c2": ["mp2", "mn2"]}
print(format_score(cluster_score(nand2, two).total))

# %% [markdown]
# Scores are exact fractions, so comparing candidates never depends on
# floating point noise.

# %%
print(cluster_score(nand2, one).total, cluster_score(nand2, two).total)

# %%
report = validate_constraints(nand2, {"c1": ["mp1", "ghost"], "c2": ["mp1"]})
print(report)
