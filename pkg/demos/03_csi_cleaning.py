"""Rotation-invariant CSI cleaning, including where it fails.

Runs the blind pipeline (estimate the corruption level, then shrink the
eigenvalues of the augmented observation) against the raw observation and
against the scalar conditional-mean benchmark.  The implemented shrinkage
rule zeroes the lower spectral bulk: at moderate-to-heavy corruption it
still beats the raw observation by a wide margin, but at light corruption
the over-shrinkage makes it WORSE than doing nothing, and it floors above
the conditional-mean error at every level.  Both behaviors are shown.
"""

import numpy as np

from eiprecode import (
    CorruptionModel,
    SystemDims,
    clean_channel,
    corrupt,
    estimate_eta,
    gen_channel,
    mse,
)
from eiprecode.rie import eig_bsca
from eiprecode.channel import build_bsca

dims = SystemDims(users=20, antennas=256)
trials = 30

print(f"system: {dims.users} x {dims.antennas}, additive corruption, "
      f"{trials} blind trials per level\n")
print(f"{'eta':>5} {'mse(raw)':>10} {'mse(clean)':>11} {'mse(bayes)':>11} "
      f"{'floor':>10} {'wins':>5}")
for eta in (0.1, 0.3, 0.5, 0.9):
    model = CorruptionModel(eta=eta, mode="additive", c=1.0)
    scal = 1.0 / (1.0 + model.alpha() ** 2)
    key = int(round(100 * eta))
    raw, cleaned, bayes, wins = [], [], [], 0
    for t in range(trials):
        H = gen_channel(dims, np.random.default_rng((key, t, 0)))
        H_obs = corrupt(H, model, np.random.default_rng((key, t, 1)))
        eta_hat = estimate_eta(H_obs, dims.q).eta_hat
        H_hat = clean_channel(H_obs, eta_hat, dims.q)
        m_c = mse(H, H_hat)
        raw.append(mse(H, H_obs))
        cleaned.append(m_c)
        bayes.append(mse(H, scal * H_obs))
        wins += m_c <= raw[-1]
    floor = eta / dims.antennas
    print(f"{eta:5.2f} {np.mean(raw):10.2e} {np.mean(cleaned):11.2e} "
          f"{np.mean(bayes):11.2e} {floor:10.2e} {wins:4d}/{trials}")

print("""
reading the table:
  - 'bayes' is the exact conditional mean (a scalar multiple of the raw
    observation); its error equals the floor eta/antennas, as it must.
  - at eta = 0.5 and 0.9 the eigenvalue cleaner beats raw in every trial
    but still sits well above the floor (about 1.7x at eta = 0.5).
  - at light corruption it loses every trial: the correct action is a mild
    uniform shrink (by 0.90 at eta = 0.1), but the rule halves the bottom
    of the spectrum and slightly inflates the top.
""")

# the mis-shrinkage on one draw at light corruption: bottom of the spectrum
# cut to ~half when the conditional mean says shrink everything by 0.90
eta = 0.1
model = CorruptionModel(eta=eta, mode="additive", c=1.0)
H = gen_channel(dims, np.random.default_rng(1001))
H_obs = corrupt(H, model, np.random.default_rng(1002))
eta_hat = estimate_eta(H_obs, dims.q).eta_hat
H_hat = clean_channel(H_obs, eta_hat, dims.q)
sv_obs = np.linalg.svd(H_obs, compute_uv=False)
sv_hat = np.linalg.svd(H_hat, compute_uv=False)
ratio = sv_hat / sv_obs
print(f"one draw at eta = {eta} (estimated {eta_hat:.3f}): singular-value "
      f"shrink ratios top {ratio[0]:.2f}, median {np.median(ratio):.2f}, "
      f"bottom {ratio[-1]:.2f} (conditional mean would use "
      f"{1.0 / (1.0 + model.alpha() ** 2):.2f} throughout)")

# at less lopsided aspect ratios the same rule clamps outright: part of the
# spectrum maps to zero, which is what floors the downlink error rate
dims2 = SystemDims(users=20, antennas=128)
model2 = CorruptionModel(eta=0.3, mode="additive", c=1.0)
H2 = gen_channel(dims2, np.random.default_rng(1003))
H2_obs = corrupt(H2, model2, np.random.default_rng(1004))
H2_hat = clean_channel(H2_obs, estimate_eta(H2_obs, dims2.q).eta_hat, dims2.q)
sv2 = np.linalg.svd(H2_hat, compute_uv=False)
print(f"one draw at 20 x 128, eta = 0.3: {int(np.sum(sv2 <= 1e-12))} of "
      f"{sv2.size} singular values mapped to zero")

# the eigenvector pairing underneath the cleaner
decomp = eig_bsca(build_bsca(H_obs))
print(f"augmented decomposition: {decomp.zero_mask.sum()} null directions, "
      f"{len(decomp.positive_indices)} paired +- eigenvalue couples")
