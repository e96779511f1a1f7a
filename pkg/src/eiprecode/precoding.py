"""Uniform quantization, Bussgang linearization, and linear precoders.

Quantizer layout for B bits and step D, applied to the real and imaginary
components separately:

* labels     l_j = D (j - (2^B - 1)/2),  j = 0 .. 2^B - 1
* thresholds t_l = D (l - 2^(B-1)),      l = 1 .. 2^B - 1

so the thresholds are the midpoints between consecutive labels and a zero
input maps up (to +D/2).  The ``auto`` step rule scales the
Gaussian-distortion-minimizing unit-variance step by the per-component
input deviation.

Precoders return a matrix P with tr(P P^H) = P_total exactly and a
receiver scaling beta minimizing the linearized symbol error
E||s - beta(H F P s + H d + n)||^2 in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize
from scipy.special import erf

__all__ = [
    "QuantizerSpec",
    "BussgangModel",
    "PrecodeOutput",
    "make_quantizer",
    "optimal_step",
    "quantize",
    "quantized_power",
    "bussgang_gain",
    "bussgang_model",
    "measure_distortion",
    "wf_precode",
    "wfq_precode",
    "baseline_precode",
    "transmit",
]

_MAX_BITS = 12


@dataclass(frozen=True)
class QuantizerSpec:
    """Uniform quantizer: bit depth plus a concrete or 'auto' step."""

    bits: int
    step: float | str = "auto"

    def __post_init__(self):
        if not (1 <= int(self.bits) <= _MAX_BITS):
            raise ValueError(f"bits must lie in [1, {_MAX_BITS}], got {self.bits}")
        if isinstance(self.step, str):
            if self.step != "auto":
                raise ValueError(f"step must be positive or 'auto', got {self.step!r}")
        elif self.step <= 0:
            raise ValueError(f"step must be positive, got {self.step}")

    @property
    def is_auto(self) -> bool:
        return isinstance(self.step, str)

    def materialize(self, input_variance: float) -> "QuantizerSpec":
        """Concrete spec for a given per-component input variance."""
        if not self.is_auto:
            return self
        if input_variance < 0:
            raise ValueError("input_variance must be nonnegative")
        return QuantizerSpec(self.bits, optimal_step(self.bits) * float(np.sqrt(input_variance)))

    def labels(self) -> np.ndarray:
        if self.is_auto:
            raise ValueError("labels undefined for an unmaterialized auto step")
        j = np.arange(2 ** self.bits)
        return self.step * (j - (2 ** self.bits - 1) / 2.0)

    def thresholds(self) -> np.ndarray:
        if self.is_auto:
            raise ValueError("thresholds undefined for an unmaterialized auto step")
        l = np.arange(1, 2 ** self.bits)
        return self.step * (l - 2 ** (self.bits - 1))


def make_quantizer(
    bits: int, step: float | str = "auto", input_variance: float | None = None
) -> QuantizerSpec:
    """Build a quantizer spec; with step='auto' and a known per-component
    input variance the optimal uniform step is materialized immediately."""
    spec = QuantizerSpec(int(bits), step)
    if spec.is_auto and input_variance is not None:
        spec = spec.materialize(input_variance)
    return spec


def _gaussian_distortion(step: float, bits: int) -> float:
    """E (Q(x) - x)^2 for x ~ N(0, 1) under the label/threshold layout."""
    n = 2 ** bits
    labels = step * (np.arange(n) - (n - 1) / 2.0)
    edges = np.concatenate(([-np.inf], step * (np.arange(1, n) - n / 2.0), [np.inf]))

    def _phi(x):
        out = np.zeros_like(x)
        finite = np.isfinite(x)
        out[finite] = np.exp(-0.5 * x[finite] ** 2) / np.sqrt(2.0 * np.pi)
        return out

    def _cdf(x):
        return 0.5 * (1.0 + erf(np.where(np.isfinite(x), x, np.sign(x) * 40.0) / np.sqrt(2.0)))

    a, b = edges[:-1], edges[1:]
    pa, pb = _phi(a), _phi(b)
    ca, cb = _cdf(a), _cdf(b)
    mass = cb - ca
    # integral of x^2 phi over the cell minus first-moment cross term
    x2 = mass - (np.where(np.isfinite(b), b, 0.0) * pb - np.where(np.isfinite(a), a, 0.0) * pa)
    x1 = pa - pb
    return float(np.sum(x2 - 2.0 * labels * x1 + labels ** 2 * mass))


@lru_cache(maxsize=None)
def optimal_step(bits: int) -> float:
    """Distortion-minimizing uniform step for a unit-variance Gaussian input."""
    if not (1 <= bits <= _MAX_BITS):
        raise ValueError(f"bits must lie in [1, {_MAX_BITS}], got {bits}")
    res = optimize.minimize_scalar(
        lambda d: _gaussian_distortion(d, bits),
        bounds=(1e-4, 3.0),
        method="bounded",
        options={"xatol": 1e-8},
    )
    return float(res.x)


def _quantize_real(v: np.ndarray, bits: int, step) -> np.ndarray:
    n = 2 ** bits
    idx = np.floor(v / step) + n // 2
    idx = np.clip(idx, 0, n - 1)
    return step * (idx - (n - 1) / 2.0)


def quantize(x: np.ndarray, spec: QuantizerSpec, input_variance=None) -> np.ndarray:
    """Quantize the real and imaginary parts of x on the label grid.

    ``input_variance`` (per real component) materializes an auto step; for
    matrix inputs it may be a per-row array so every antenna gets its own
    step.  Saturating inputs clamp to the outermost labels; zero maps up.
    """
    x = np.asarray(x, dtype=complex)
    if spec.is_auto:
        if input_variance is None:
            raise ValueError("auto-step quantization needs input_variance")
        iv = np.asarray(input_variance, dtype=float)
        step = optimal_step(spec.bits) * np.sqrt(iv)
        if step.ndim == 1 and x.ndim == 2:
            step = step[:, None]
        if np.any(step <= 0):
            step = np.where(step <= 0, 1.0, step)  # dead antennas: grid is moot
    else:
        step = spec.step
    return _quantize_real(x.real, spec.bits, step) + 1j * _quantize_real(
        x.imag, spec.bits, step
    )


def bussgang_gain(spec: QuantizerSpec, sigma_u2: float) -> float:
    """Linear (Bussgang) gain of the quantizer for a CN(0, sigma_u2) input.

    F = (D / sqrt(pi sigma_u2)) * sum_l exp(-D^2 (l - 2^(B-1))^2 / sigma_u2)
    over the threshold indices l = 1 .. 2^B - 1.  A zero-variance input is
    assigned gain 1 (no signal, no distortion).
    """
    if sigma_u2 < 0:
        raise ValueError("sigma_u2 must be nonnegative")
    if sigma_u2 == 0.0:
        return 1.0
    concrete = spec.materialize(sigma_u2 / 2.0)
    d = concrete.step
    l = np.arange(1, 2 ** concrete.bits)
    expo = np.exp(-(d ** 2) * (l - 2 ** (concrete.bits - 1)) ** 2 / sigma_u2)
    return float(d / np.sqrt(np.pi * sigma_u2) * np.sum(expo))


def quantized_power(spec: QuantizerSpec, sigma_u2: float) -> float:
    """E |Q(u)|^2 for a CN(0, sigma_u2) input (both components pooled)."""
    if sigma_u2 <= 0.0:
        return 0.0
    concrete = spec.materialize(sigma_u2 / 2.0)
    s = np.sqrt(sigma_u2 / 2.0)
    labels = concrete.labels()
    edges = np.concatenate(([-np.inf], concrete.thresholds(), [np.inf]))
    z = np.where(np.isfinite(edges), edges, np.sign(edges) * 40.0 * s) / (s * np.sqrt(2.0))
    cdf = 0.5 * (1.0 + erf(z))
    mass = cdf[1:] - cdf[:-1]
    return float(2.0 * np.sum(labels ** 2 * mass))


@dataclass(frozen=True)
class BussgangModel:
    """Per-antenna linearization of the quantized transmit chain."""

    gains: np.ndarray        # diagonal of the A x A gain matrix F
    sigma_d2: np.ndarray     # per-antenna distortion variances
    sigma_m2: np.ndarray     # per-antenna quantizer-input variances

    def as_matrix(self) -> np.ndarray:
        return np.diag(self.gains)


def bussgang_model(
    P: np.ndarray, spec: QuantizerSpec, sigma2: float, users: int
) -> BussgangModel:
    """Diagonal Bussgang gains and the distortion variances
    sigma_d2 = (1 - F_mm)(U sigma^2 + 1) for the precoder input covariance
    R_zz = P P^H (unit-energy symbols)."""
    P = np.asarray(P)
    sigma_m2 = np.einsum("ij,ij->i", P, P.conj()).real
    gains = np.array([bussgang_gain(spec, sm) for sm in sigma_m2])
    sigma_d2 = (1.0 - gains) * (users * sigma2 + 1.0)
    return BussgangModel(gains=gains, sigma_d2=sigma_d2, sigma_m2=sigma_m2)


def measure_distortion(
    P: np.ndarray,
    spec: QuantizerSpec,
    rng: np.random.Generator,
    draws: int = 20000,
) -> np.ndarray:
    """Monte-Carlo per-antenna distortion power E|Q(u) - F u|^2 with
    Gaussian symbols; diagnostic companion to the closed-form sigma_d2."""
    P = np.asarray(P)
    a, u = P.shape
    s = (rng.standard_normal((u, draws)) + 1j * rng.standard_normal((u, draws))) / np.sqrt(2.0)
    z = P @ s
    sigma_m2 = np.einsum("ij,ij->i", P, P.conj()).real
    gains = np.array([bussgang_gain(spec, sm) for sm in sigma_m2])
    q = quantize(z, spec, input_variance=sigma_m2 / 2.0)
    d = q - gains[:, None] * z
    return np.mean(np.abs(d) ** 2, axis=1)


@dataclass(frozen=True)
class PrecodeOutput:
    """Power-normalized precoding matrix plus receiver scaling."""

    P: np.ndarray
    beta: float
    kind: str
    p_total: float
    converged: bool = True
    residuals: tuple = field(default=())


def _normalize_power(P_raw: np.ndarray, p_total: float) -> np.ndarray:
    power = np.sum(np.abs(P_raw) ** 2)
    if power == 0:
        raise np.linalg.LinAlgError("zero precoding matrix")
    return P_raw * np.sqrt(p_total / power)


def _receiver_beta(
    H_csi: np.ndarray, P: np.ndarray, sigma2: float, model: BussgangModel | None
) -> float:
    users = H_csi.shape[0]
    if model is None:
        HFP = H_csi @ P
        distortion = 0.0
    else:
        HFP = H_csi @ (model.gains[:, None] * P)
        distortion = float(
            np.einsum("um,m,um->", H_csi, model.sigma_d2, H_csi.conj()).real
        )
    num = float(np.trace(HFP).real)
    den = float(np.sum(np.abs(HFP) ** 2)) + distortion + users * sigma2
    if den <= 0:
        return 1.0
    return max(num / den, np.finfo(float).tiny)


def wf_precode(
    H_csi: np.ndarray, sigma2: float, p_total: float = 1.0
) -> PrecodeOutput:
    """Regularized (Wiener) precoder P ~ H^H (H H^H + U sigma^2 I)^{-1},
    scaled to tr(P P^H) = P_total."""
    H_csi = np.asarray(H_csi)
    users = H_csi.shape[0]
    gram = H_csi @ H_csi.conj().T + users * sigma2 * np.eye(users)
    P_raw = np.linalg.solve(gram, H_csi).conj().T
    P = _normalize_power(P_raw, p_total)
    beta = _receiver_beta(H_csi, P, sigma2, None)
    return PrecodeOutput(P=P, beta=beta, kind="WF", p_total=float(p_total))


def wfq_precode(
    H_csi: np.ndarray,
    sigma2: float,
    p_total: float = 1.0,
    spec: QuantizerSpec | None = None,
    rel_tol: float = 1e-6,
    max_iter: int = 10,
) -> tuple[PrecodeOutput, BussgangModel]:
    """Quantization-aware regularized precoder.

    Fixed point on the distortion variances: theta = sigma^2 + mean(sigma_d2)
    feeds the regularizer H^H (H H^H + U theta I)^{-1}; the Bussgang model of
    the normalized matrix updates sigma_d2.  sigma_d2 is per antenna while the
    regularized Gram is U x U, so the antenna average enters the loop (exact
    under the auto step rule, which makes sigma_d2 constant across antennas).
    """
    if spec is None:
        out = wf_precode(H_csi, sigma2, p_total)
        model = BussgangModel(
            gains=np.ones(H_csi.shape[1]),
            sigma_d2=np.zeros(H_csi.shape[1]),
            sigma_m2=np.einsum("ij,ij->i", out.P, out.P.conj()).real,
        )
        return out, model
    H_csi = np.asarray(H_csi)
    users = H_csi.shape[0]
    eye = np.eye(users)
    sigma_d2 = np.zeros(H_csi.shape[1])
    residuals = []
    converged = False
    P = None
    model = None
    for _ in range(max_iter):
        theta = sigma2 + float(np.mean(sigma_d2))
        gram = H_csi @ H_csi.conj().T + users * theta * eye
        P = _normalize_power(np.linalg.solve(gram, H_csi).conj().T, p_total)
        model = bussgang_model(P, spec, sigma2, users)
        prev = sigma_d2
        sigma_d2 = model.sigma_d2
        denom = max(float(np.linalg.norm(sigma_d2)), np.finfo(float).tiny)
        res = float(np.linalg.norm(sigma_d2 - prev)) / denom
        residuals.append(res)
        if res < rel_tol:
            converged = True
            break
    beta = _receiver_beta(H_csi, P, sigma2, model)
    out = PrecodeOutput(
        P=P,
        beta=beta,
        kind="WFQ",
        p_total=float(p_total),
        converged=converged,
        residuals=tuple(residuals),
    )
    return out, model


def baseline_precode(
    kind: str,
    H_csi: np.ndarray,
    p_total: float = 1.0,
    spec: QuantizerSpec | None = None,
    sigma2: float = 0.0,
) -> PrecodeOutput:
    """MRT, ZF, or QCE precoder, power-normalized.

    QCE stores the (normalized) regularized matrix that supplies the phases;
    the constant-envelope mapping itself happens in :func:`transmit`, where
    each antenna sample becomes sqrt(P_total/A) * exp(i * quantized phase),
    so per-symbol radiated power is exactly P_total.
    """
    H_csi = np.asarray(H_csi)
    users = H_csi.shape[0]
    if kind == "MRT":
        P = _normalize_power(H_csi.conj().T, p_total)
    elif kind == "ZF":
        gram = H_csi @ H_csi.conj().T
        P = _normalize_power(np.linalg.solve(gram, H_csi).conj().T, p_total)
    elif kind == "QCE":
        if spec is None:
            raise ValueError("QCE needs a quantizer spec for the phase sectors")
        gram = H_csi @ H_csi.conj().T + users * sigma2 * np.eye(users)
        P = _normalize_power(np.linalg.solve(gram, H_csi).conj().T, p_total)
    else:
        raise ValueError(f"unknown baseline kind {kind!r}")
    beta = _receiver_beta(H_csi, P, sigma2, None)
    return PrecodeOutput(P=P, beta=beta, kind=kind, p_total=float(p_total))


def transmit(
    pout: PrecodeOutput,
    s: np.ndarray,
    spec: QuantizerSpec | None = None,
    renormalize: bool = True,
) -> np.ndarray:
    """Map symbol vectors to antenna samples through the configured DACs.

    ``spec=None`` bypasses quantization (ideal DACs).  For QCE outputs the
    antenna samples are constant-envelope with the phase rounded to one of
    2^B sectors.  Otherwise the precoded samples are quantized per antenna
    (auto steps from diag(P P^H)) and, when ``renormalize`` is set, scaled
    by a deterministic scalar so the expected radiated power is P_total.
    """
    s = np.asarray(s, dtype=complex)
    x_lin = pout.P @ s
    if pout.kind == "QCE":
        if spec is None:
            raise ValueError("QCE transmit needs a quantizer spec")
        sectors = 2 ** spec.bits
        width = 2.0 * np.pi / sectors
        phase = np.round(np.angle(x_lin) / width) * width
        amp = np.sqrt(pout.p_total / pout.P.shape[0])
        return amp * np.exp(1j * phase)
    if spec is None:
        return x_lin
    sigma_m2 = np.einsum("ij,ij->i", pout.P, pout.P.conj()).real
    x = quantize(x_lin, spec, input_variance=sigma_m2 / 2.0)
    if renormalize:
        p_rad = float(np.sum([quantized_power(spec, sm) for sm in sigma_m2]))
        if p_rad > 0:
            x = x * np.sqrt(pout.p_total / p_rad)
    return x
