"""Link-level bit error rate under quantized precoding and imperfect CSI.

Runs the Monte-Carlo engine for three CSI modes at a few SNR points and
prints the resulting table with Wilson confidence bounds.  Two honest
findings from the test suite show up directly: raw noisy CSI tracks the
perfect-CSI curve at a fixed gap (the raw observation is proportional to
the conditional-mean channel estimate), while the eigenvalue-cleaned CSI
floors at a high error rate because the shrinkage rule deletes part of the
precoder's column space.
"""

from eiprecode import SimConfig, monte_carlo

BASE = dict(
    users=20,
    antennas=128,
    eta=(0.3,),
    bits=4,
    modulation="QPSK",
    trials=60,
    symbols_per_trial=100,
    min_errors=50,
    max_bits=240_000,
    seed=4242,
)

MODES = (
    ("perfect CSI, unquantized", dict(precoder="WF", csi="perfect", bits=None)),
    ("raw noisy CSI, 4-bit", dict(precoder="WFQ", csi="noisy_raw")),
    ("cleaned CSI, 4-bit", dict(precoder="WFQ", csi="ei_cleaned")),
)

print("20 users x 128 antennas, corruption level 0.3, QPSK\n")
print(f"{'CSI / precoder':<28} {'SNR':>5} {'BER':>9} {'95% interval':>22} {'bits':>9}")
for label, kw in MODES:
    cfg = SimConfig(**{**BASE, **kw})
    for snr in (0.0, 6.0, 12.0):
        agg = monte_carlo(cfg, eta=0.3, snr_db=snr)
        ci = f"[{agg.ber_lo:.2e}, {agg.ber_hi:.2e}]"
        print(f"{label:<28} {snr:5.0f} {agg.ber:9.2e} {ci:>22} {agg.bits:9d}")
    print()

print("""notes:
  - the cleaned-CSI error rate does not fall with SNR; as the noise drops
    the regularizer weakens and the precoder aligns harder with the
    mutilated channel estimate, so the floor set by the zeroed singular
    values dominates.
  - the raw-CSI curve improves monotonically and crosses 1e-3 a few dB
    behind the perfect-CSI reference (run the `ber` CLI subcommand with a
    finer SNR grid to locate the crossing).
""")
