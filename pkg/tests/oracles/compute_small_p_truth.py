"""Direct Monte Carlo oracle for the small-p fixture's true exceedance
probability.  Draws 1e8 inputs from the true marginals, runs the synthetic
simulator, and reports the exceedance fraction of z_crit with its MC
standard error.  The result is frozen as SMALL_P_TRUE in reliagp.ingest.

Run:  python tests/oracles/compute_small_p_truth.py
"""

import math

import numpy as np

from reliagp.distributions import sample
from reliagp.ingest import SMALL_P_MARGINALS, SMALL_P_Z_CRIT, small_p_preset, synth_simulator

N_DRAWS = 100_000_000
CHUNK = 2_000_000
SEED = 20240831


def main():
    cfg = small_p_preset()
    rng = np.random.default_rng(SEED)
    done = 0
    exceed = 0
    while done < N_DRAWS:
        m = min(CHUNK, N_DRAWS - done)
        s = np.column_stack([sample(p, rng, size=m) for _, _, p in SMALL_P_MARGINALS])
        exceed += int(np.sum(synth_simulator(s, cfg) > SMALL_P_Z_CRIT))
        done += m
    p = exceed / N_DRAWS
    se = math.sqrt(p * (1 - p) / N_DRAWS)
    print(f"p_true = {p:.8e}  (MC s.e. {se:.2e}, {exceed} exceedances in {N_DRAWS} draws)")


if __name__ == "__main__":
    main()
