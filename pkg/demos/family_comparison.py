"""Compare the waveform families on sidelobes, image quality and throughput.

Takes about a minute on one core.

    python demos/family_comparison.py
"""
from cosmic.studies import image_snr_study, islr_gain_study, se_curve, symbol_capacity_vs_n

r = islr_gain_study(seed=0)
print(f"range-profile ISLR: zone-orthogonal {r['islr_cosmic_db']:.2f} dB, "
      f"zero-shift {r['islr_zero_shift_db']:.2f} dB")

s = image_snr_study(seed=0)["snr_db"]
print("image SNR:", ", ".join(f"{k} {v:.2f} dB" for k, v in s.items()))

print("\nantennas  symbols  ISLR cosmic  ISLR ofdm")
for row in symbol_capacity_vs_n():
    print(f"{row['N']:>8}  {row['symbols_cosmic']:>7}  {row['islr_cosmic_db']:>11.2f}"
          f"  {row['islr_ofdm_db']:>9.2f}")

print("\nSNR dB  bound  cosmic  ofdm-radar   (bits/s/Hz)")
for row in se_curve():
    print(f"{row['snr_db']:>6.0f}  {row['se_bound']:>5.2f}  {row['se_cosmic']:>6.2f}"
          f"  {row['se_ofdm_radar']:>10.2f}")
