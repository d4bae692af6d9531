# %% [markdown]
# # Simulated-annealing baseline
#
# Four inverters on shared rails. The best total is 2.0, reached for example
# by pairing each PMOS with its NMOS (0.5 per pair). We run the annealer over several seeds and look
# at how the temperature controller behaves.

# %%
from pathlib import Path

import numpy as np

from cellclust import SAConfig, Session, format_score, read_netlist, run_sa
from cellclust.layout import RoutabilityReport, UnroutedNet
from cellclust.optimize import lam_target, net_weights

HERE = Path(__file__).resolve().parent
inv4 = read_netlist(HERE.parent / "tests" / "fixtures" / "four_inverters.sp")

# %%
scores = []
for seed in range(10):
    res = run_sa(Session.start(inv4), SAConfig(seed=seed))
    scores.append(float(res.best_score))
    print(seed, format_score(res.best_score), res.summary["accepted"], res.best_constraints.to_dict())

print("mean best score", np.mean(scores))

# %% [markdown]
# The acceptance-rate target starts at 1, holds 0.44 through the middle of
# the run and then decays toward zero.

# %%
total = 2000
curve = np.array([lam_target(i, total) for i in range(total)])
for frac in (0.0, 0.1, 0.15, 0.4, 0.65, 0.8, 0.99):
    print(f"{frac:>5}: {curve[int(frac * total)]:.3f}")

# %% [markdown]
# Weighting. With a routability report the unrouted nets are sampled four
# times as often as ordinary nets.

# %%
print(net_weights(inv4, report=RoutabilityReport((UnroutedNet("OUT2"),))))
