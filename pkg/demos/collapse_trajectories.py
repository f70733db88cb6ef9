#!/usr/bin/env python3
"""Single-channel measurement collapse, one trajectory at a time.

Continuous monitoring of sigma_z drives each run from the maximally mixed
state toward one of the eigenstates r_z = +/-1, and the choice of eigenstate
reproduces the Born weights (1 +/- r_z(0))/2 across the ensemble. A handful
of paths shows the characteristic capture behaviour; the printed absorption
counts show the statistics.
"""

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from qsdsep import (StepperConfig, born_fractions, run_paths,
                    simulate_trajectory, spec_rz)

ALPHA = 1.0
HORIZON = 4.0
DT = 1e-3
SEED = 71
N_SHOWN = 8
N_COUNTED = 2000

OUT = Path(__file__).parent / "figures"


def main():
    OUT.mkdir(exist_ok=True)
    spec = spec_rz(ALPHA)
    stepper = StepperConfig(dt=DT, t_max=HORIZON)

    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    for j in range(N_SHOWN):
        record = simulate_trajectory(spec, 0.0, stepper, seed=SEED,
                                     stream_index=j)
        ax.plot(record.times, record.states, lw=0.8)
    ax.axhline(1.0, color="k", lw=0.5, ls=":")
    ax.axhline(-1.0, color="k", lw=0.5, ls=":")
    ax.set_xlabel("t")
    ax.set_ylabel("$r_z$")
    ax.set_title(f"{N_SHOWN} monitored-qubit trajectories, "
                 f"$\\alpha_z = {ALPHA}$, $r_z(0) = 0$")
    fig.tight_layout()
    target = OUT / "collapse_trajectories.png"
    fig.savefig(target, dpi=150)
    print(f"wrote {target}")

    # absorption statistics over a larger ensemble, started off-centre so the
    # asymmetry of the Born weights is visible
    for r0 in (0.0, 0.4):
        batch, _ = run_paths(spec, r0, stepper, SEED, N_COUNTED,
                             record_times=[HORIZON])
        f_plus, f_minus, undecided = born_fractions(batch)
        print(f"r0 = {r0:+.1f}: f+ = {f_plus:.3f} (Born {(1 + r0) / 2:.3f}), "
              f"f- = {f_minus:.3f}, undecided {undecided:.2%} "
              f"after t = {HORIZON}")


if __name__ == "__main__":
    main()
