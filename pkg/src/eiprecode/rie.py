"""Rotation-invariant cleaning of a noisy channel observation.

Pipeline: embed the (normalized) observation in its Hermitian block
augmentation, eigendecompose, shrink each squared (Gram) eigenvalue toward
its asymptotic clean target using only observable quantities, restore the
+/- pairing, and read the cleaned channel back out of the off-diagonal
block.  Eigenvectors are kept untouched, which is the defining property of
the estimator family.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import SystemDims, build_bsca, extract_channel, normalize_observation
from .rmt import default_epsilon

__all__ = [
    "SpectralDecomp",
    "PairingError",
    "eig_bsca",
    "local_stieltjes",
    "shrink_eigenvalue",
    "reconstruct",
    "clean_channel",
    "linear_mmse_baseline",
    "mse",
]


class PairingError(RuntimeError):
    """The +/- eigenvalue pairing of an augmented matrix could not be formed."""


@dataclass
class SpectralDecomp:
    """Eigendecomposition of an augmented matrix with its +/- pairing.

    omega: eigenvalues in descending order.
    vectors: matching orthonormal eigenvectors (columns).
    pair: partner index for each nonzero eigenvalue, -1 on the null space.
    zero_mask: True where |omega| is below the null threshold.
    """

    omega: np.ndarray
    vectors: np.ndarray
    pair: np.ndarray
    zero_mask: np.ndarray

    @property
    def positive_indices(self) -> np.ndarray:
        return np.flatnonzero((~self.zero_mask) & (self.omega > 0))


def eig_bsca(B: np.ndarray, zero_tol: float = 1e-10, pair_tol: float = 1e-8) -> SpectralDecomp:
    """Eigendecompose a Hermitian augmented matrix and pair +/- eigenvalues.

    Null space detection uses |omega| <= zero_tol * max|omega|; pairing
    requires |omega_i + omega_j| < pair_tol * max|omega| and raises
    :class:`PairingError` otherwise.
    """
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.allclose(B, B.conj().T, atol=1e-12 * max(1.0, np.abs(B).max())):
        raise ValueError("expected a Hermitian matrix")
    w, v = np.linalg.eigh(B)
    order = np.argsort(w)[::-1]
    w = w[order]
    v = v[:, order]
    n = len(w)
    scale = np.abs(w).max() if n else 0.0
    pair = np.full(n, -1, dtype=int)
    if scale == 0.0:
        zero_mask = np.ones(n, dtype=bool)
        return SpectralDecomp(w, v, pair, zero_mask)
    zero_mask = np.abs(w) <= zero_tol * scale
    pos = [i for i in range(n) if not zero_mask[i] and w[i] > 0]
    neg = [i for i in range(n) if not zero_mask[i] and w[i] < 0]
    if len(pos) != len(neg):
        raise PairingError(
            f"unbalanced spectrum: {len(pos)} positive vs {len(neg)} negative"
        )
    # descending order lists positives largest-first; the matching negative
    # partners are the most negative ones in reverse order
    neg_sorted = sorted(neg, key=lambda i: w[i])
    for i, j in zip(pos, neg_sorted):
        if abs(w[i] + w[j]) >= pair_tol * scale:
            raise PairingError(
                f"no partner within tolerance for eigenvalue {w[i]:.6g} "
                f"(candidate {w[j]:.6g})"
            )
        pair[i] = j
        pair[j] = i
    return SpectralDecomp(w, v, pair, zero_mask)


def local_stieltjes(gram_eigs, omega_k: float, epsilon: float) -> tuple[float, float]:
    """Leave-one-out empirical Stieltjes of the Gram spectrum at omega_k + i*eps.

    Excludes the entry matching omega_k (nearest entry when no exact match)
    and returns (real part, imaginary part) of mean(1/(lam - omega_k - i eps))
    over the remaining eigenvalues.  The imaginary part is a local density
    probe (no 1/pi factor applied).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    lam = np.asarray(gram_eigs, dtype=float).ravel()
    if lam.size == 0:
        raise ValueError("empty eigenvalue list")
    drop = int(np.argmin(np.abs(lam - omega_k)))
    rest = np.delete(lam, drop)
    if rest.size == 0:
        return (0.0, 0.0)
    g = np.mean(1.0 / (rest - (omega_k + 1j * epsilon)))
    return (float(g.real), float(g.imag))


def shrink_eigenvalue(
    omega: float,
    h: float,
    rho: float,
    q: float,
    alpha: float,
    variant: str = "anchored",
) -> float:
    """Shrink one noisy Gram eigenvalue toward its asymptotic clean target.

    With a2 = alpha^2:
        phi1 = 1 - q a2 h
        phi2 = omega - a2 (1 - q) - 2 q a2 h
        phi3 = h (omega - a2 (1 - q) + q a2 omega (rho - h))
        printed  = phi1 phi2 + phi3
        anchored = printed - h omega   (removes the alpha = 0 residual so
                                        that shrink(omega; alpha=0) = omega)
    The result is clamped at 0 to keep the implied Gram positive
    semidefinite.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if variant not in ("printed", "anchored"):
        raise ValueError(f"unknown variant {variant!r}")
    a2 = alpha * alpha
    phi1 = 1.0 - q * a2 * h
    phi2 = omega - a2 * (1.0 - q) - 2.0 * q * a2 * h
    phi3 = h * (omega - a2 * (1.0 - q) + q * a2 * omega * (rho - h))
    lam = phi1 * phi2 + phi3
    if variant == "anchored":
        lam -= h * omega
    return max(float(lam), 0.0)


def reconstruct(
    decomp: SpectralDecomp,
    lambda_hat,
    dims: SystemDims,
    rescale: float = 1.0,
) -> np.ndarray:
    """Reassemble the channel block from shrunk augmented eigenvalues.

    lambda_hat must respect the +/- pairing (matched-sign pairs) and vanish
    on the null space; violations raise :class:`PairingError`.  The output
    block is multiplied by ``rescale`` (identity by default; pass
    sqrt(1 - eta_hat) to undo an observation normalization when the damped
    frame is the desired estimand).
    """
    lam = np.asarray(lambda_hat, dtype=float).ravel()
    if lam.size != decomp.omega.size:
        raise ValueError("lambda_hat length mismatch")
    scale = np.abs(lam).max() if lam.size else 0.0
    tol = 1e-8 * max(scale, 1e-300)
    for i in range(lam.size):
        j = decomp.pair[i]
        if j == -1:
            if abs(lam[i]) > tol:
                raise PairingError(
                    f"null-space eigenvalue {i} assigned nonzero value {lam[i]:.3g}"
                )
        elif abs(lam[i] + lam[j]) > tol:
            raise PairingError(
                f"pair ({i}, {j}) breaks sign symmetry: {lam[i]:.6g}, {lam[j]:.6g}"
            )
    B_hat = (decomp.vectors * lam) @ decomp.vectors.conj().T
    return float(rescale) * extract_channel(B_hat, dims)


def clean_channel(
    H_obs: np.ndarray,
    eta_hat: float,
    q: float,
    variant: str = "anchored",
    mode: str = "additive",
    c: float = 1.0,
    denormalize: bool = False,
) -> np.ndarray:
    """Full cleaning pipeline: normalize, augment, shrink, reconstruct.

    ``mode`` declares the corruption form of the observation: damped
    observations are divided by sqrt(1 - eta_hat) first (additive ones are
    already in the required form), so the estimand is the true channel.
    Set ``denormalize=True`` to rescale the output back into the damped
    observation frame instead.
    """
    H_obs = np.asarray(H_obs, dtype=complex)
    u, a = H_obs.shape
    dims = SystemDims(u, a)
    if not 0.0 <= eta_hat < 1.0:
        raise ValueError("eta_hat must lie in [0, 1)")
    if mode not in ("additive", "damped"):
        raise ValueError(f"unknown mode {mode!r}")
    X = normalize_observation(H_obs, eta_hat) if mode == "damped" else H_obs
    alpha = float(np.sqrt(eta_hat * c / (1.0 - eta_hat)))
    decomp = eig_bsca(build_bsca(X))
    pos = decomp.positive_indices
    gram_eigs = decomp.omega[pos] ** 2
    epsilon = default_epsilon(u + a)
    lam_signed = np.zeros_like(decomp.omega)
    for idx, k in enumerate(pos):
        h, rho = local_stieltjes(gram_eigs, gram_eigs[idx], epsilon)
        lam_gram = shrink_eigenvalue(gram_eigs[idx], h, rho, q, alpha, variant)
        root = np.sqrt(lam_gram)
        lam_signed[k] = root
        lam_signed[decomp.pair[k]] = -root
    rescale = np.sqrt(1.0 - eta_hat) if (denormalize and mode == "damped") else 1.0
    return reconstruct(decomp, lam_signed, dims, rescale=rescale)


def linear_mmse_baseline(H_obs: np.ndarray, eta: float) -> np.ndarray:
    """Entrywise conditional-mean baseline for damped observations (c = 1):
    sqrt(1 - eta) * H_obs."""
    if not 0.0 <= eta < 1.0:
        raise ValueError("eta must lie in [0, 1)")
    return np.sqrt(1.0 - eta) * np.asarray(H_obs)


def mse(H: np.ndarray, H_hat: np.ndarray) -> float:
    """Normalized reconstruction error (1/(U A)) * ||H - H_hat||_F^2."""
    H = np.asarray(H)
    H_hat = np.asarray(H_hat)
    if H.shape != H_hat.shape:
        raise ValueError(f"shape mismatch: {H.shape} vs {H_hat.shape}")
    diff = H - H_hat
    return float(np.mean(np.abs(diff) ** 2))
