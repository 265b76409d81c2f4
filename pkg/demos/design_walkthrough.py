"""Walk through the design of a zone-orthogonal waveform set.

Shows the dimension budget, builds a set, and compares its zone residuals
with the OFDM and zero-shift baselines.

    python demos/design_walkthrough.py
"""
import numpy as np

from cosmic import (CosmicConfig, feasibility_check, generate_cosmic_set, generate_ofdm_set,
                    generate_zero_shift_set, max_pair_residual)

K, N, K_z = 512, 4, 12
cfg = CosmicConfig(K=K, N=N, K_s=K // N, K_z=K_z, mode="symmetric", seed=1)

# each earlier antenna costs 2K_z - 1 lags of freedom in symmetric mode
budget = feasibility_check(K, N, K // N, K_z, "symmetric")
print("predicted symbols per antenna:", budget["predicted"])

ws = generate_cosmic_set(cfg, data_seed=0)
print("computed symbols per antenna: ", list(ws.capacities))
print("data bits per slot:", sum(ws.capacities) * 4)

print("\nworst normalized cross-correlation inside the zone")
print(f"  cosmic     {max_pair_residual(ws):.2e}")
print(f"  zero-shift {max_pair_residual(generate_zero_shift_set(K, N, seed=1), K_z, 'symmetric'):.2e}")
print(f"  ofdm       {max_pair_residual(generate_ofdm_set(K, N, seed=1), K_z, 'symmetric'):.2e}  "
      "(no cyclic prefix, so lags other than zero leak)")

# a large tuple runs out of dimensions part way through the array
big = feasibility_check(3000, 12, 250, 67)
print(f"\nK=3000, N=12, K_s=250, K_z=67: feasible={big['feasible']}, "
      f"first empty antenna {big['first_infeasible_antenna']}")
print("  budget:", big["predicted"][:7], "...")
