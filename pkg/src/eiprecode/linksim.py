"""Seeded link-level Monte-Carlo engine for the quantized downlink.

Scale convention: the spectral machinery works on 1/A-variance channel
entries; the link layer propagates through sqrt(A) * H (unit-variance
entries) and hands the precoder its CSI in the same scale, so that
SNR(dB) = 10 log10(P_total / sigma^2) with P_total = 1 holds literally.
Every emitted table states this convention.

Randomness: trial t derives four independent substreams from
SeedSequence(entropy=master_seed, spawn_key=(t, purpose)) with purpose
codes 0 = channel, 1 = corruption, 2 = receiver noise, 3 = symbols, so
flipping the CSI handling or the precoder never changes the draws, and any
trial is recomputable in isolation.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import precoding
from .channel import CorruptionModel, SystemDims, corrupt, gen_channel
from .eta import EstimatorConfig, delta_eta, estimate_eta
from .rie import clean_channel, mse

__all__ = [
    "SNR_DEFINITION",
    "SimConfig",
    "TrialMetrics",
    "Aggregate",
    "MonteCarloError",
    "modulate",
    "demodulate",
    "qfunc",
    "awgn_qpsk_ber",
    "wilson_interval",
    "downlink_trial",
    "monte_carlo",
]

SNR_DEFINITION = "snr_db = 10*log10(P_total/sigma2), P_total = 1, unit-variance channel entries at the link layer"

_PRECODERS = ("WF", "WFQ", "MRT", "ZF", "QCE")
_CSI_MODES = ("perfect", "noisy_raw", "ei_cleaned", "ei_cleaned_known_eta")
_CHUNK = 8  # fixed accumulation granularity; parallelism never crosses it


@dataclass(frozen=True)
class SimConfig:
    """Complete description of one Monte-Carlo experiment family."""

    users: int = 20
    antennas: int = 128
    eta: tuple = (0.3,)
    corruption_mode: str = "additive"
    c: float = 1.0
    precoder: str = "WFQ"
    csi: str = "ei_cleaned"
    bits: int | None = 4
    modulation: str = "QPSK"
    snr_db: tuple = (10.0,)
    trials: int = 1000
    symbols_per_trial: int = 100
    seed: int = 1234
    threads: int = 1
    min_errors: int = 100
    max_bits: int = 10_000_000
    estimator_order: int | None = None
    theory_mode: str = "gaussian_equivalent"
    rie_variant: str = "anchored"
    p_total: float = 1.0
    antennas_grid: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "eta", _as_tuple(self.eta, float))
        object.__setattr__(self, "snr_db", _as_tuple(self.snr_db, float))
        if self.antennas_grid is not None:
            object.__setattr__(self, "antennas_grid", _as_tuple(self.antennas_grid, int))
        # tolerate case variation from config files and flags
        object.__setattr__(self, "precoder", str(self.precoder).upper())
        object.__setattr__(self, "csi", str(self.csi).lower())
        object.__setattr__(self, "corruption_mode", str(self.corruption_mode).lower())
        object.__setattr__(self, "modulation", str(self.modulation).upper())
        object.__setattr__(self, "theory_mode", str(self.theory_mode).lower())
        object.__setattr__(self, "rie_variant", str(self.rie_variant).lower())
        if not 0 < self.users < self.antennas:
            raise ValueError("need 0 < users < antennas")
        for e in self.eta:
            if not 0.0 <= e < 1.0:
                raise ValueError(f"eta values must lie in [0, 1), got {e}")
        if self.corruption_mode not in ("additive", "damped"):
            raise ValueError(f"unknown corruption_mode {self.corruption_mode!r}")
        if self.precoder not in _PRECODERS:
            raise ValueError(f"precoder must be one of {_PRECODERS}, got {self.precoder!r}")
        if self.csi not in _CSI_MODES:
            raise ValueError(f"csi must be one of {_CSI_MODES}, got {self.csi!r}")
        if self.bits is not None and not 1 <= int(self.bits) <= 12:
            raise ValueError("bits must lie in [1, 12] or be null for bypass")
        if self.modulation not in ("QPSK", "16QAM"):
            raise ValueError(f"unknown modulation {self.modulation!r}")
        if self.trials < 1 or self.symbols_per_trial < 1:
            raise ValueError("trials and symbols_per_trial must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.rie_variant not in ("anchored", "printed"):
            raise ValueError(f"unknown rie_variant {self.rie_variant!r}")
        if self.theory_mode not in ("gaussian_equivalent", "printed"):
            raise ValueError(f"unknown theory_mode {self.theory_mode!r}")

    @property
    def dims(self) -> SystemDims:
        return SystemDims(self.users, self.antennas)

    @property
    def q(self) -> float:
        return self.users / self.antennas

    def at(self, **kw) -> "SimConfig":
        return replace(self, **kw)


def _as_tuple(v, cast):
    if isinstance(v, (list, tuple, np.ndarray)):
        return tuple(cast(x) for x in v)
    return (cast(v),)


@dataclass(frozen=True)
class TrialMetrics:
    trial_index: int
    bits_sent: int
    bit_errors: int
    mse_csi: float | None
    mse_noisy: float | None
    delta_eta: float | None
    eta_hat: float | None
    converged: bool
    seed_key: tuple

    def __post_init__(self):
        if self.bit_errors > self.bits_sent:
            raise ValueError("bit_errors cannot exceed bits_sent")


@dataclass(frozen=True)
class Aggregate:
    bits: int
    errors: int
    ber: float
    ber_lo: float
    ber_hi: float
    trials_run: int
    resolved: bool
    mse_mean: float | None
    mse_noisy_mean: float | None
    delta_eta_values: tuple
    eta_hat_values: tuple
    all_converged: bool


class MonteCarloError(RuntimeError):
    """A trial failed; carries the partial aggregate in ``partial``."""

    def __init__(self, message, trial_index, partial):
        super().__init__(message)
        self.trial_index = trial_index
        self.partial = partial


# ---------------------------------------------------------------------------
# Modulation


def _bits_per_symbol(scheme: str) -> int:
    return {"QPSK": 2, "16QAM": 4}[scheme]


_PAM4_LEVELS = np.array([-3.0, -1.0, 1.0, 3.0]) / np.sqrt(10.0)
# Gray map per axis: bit pair (b_hi, b_lo) -> level index
_PAM4_INDEX = {(0, 0): 0, (0, 1): 1, (1, 1): 2, (1, 0): 3}
_PAM4_BITS = {v: k for k, v in _PAM4_INDEX.items()}


def modulate(bits, scheme: str = "QPSK") -> np.ndarray:
    """Gray-mapped unit-energy symbols from a flat 0/1 array."""
    bits = np.asarray(bits, dtype=int).ravel()
    bps = _bits_per_symbol(scheme)
    if bits.size % bps:
        raise ValueError(f"bit count {bits.size} not divisible by {bps}")
    if scheme == "QPSK":
        pairs = bits.reshape(-1, 2)
        return ((1.0 - 2.0 * pairs[:, 0]) + 1j * (1.0 - 2.0 * pairs[:, 1])) / np.sqrt(2.0)
    quads = bits.reshape(-1, 4)
    i_idx = np.array([_PAM4_INDEX[(b0, b1)] for b0, b1 in zip(quads[:, 0], quads[:, 1])])
    q_idx = np.array([_PAM4_INDEX[(b0, b1)] for b0, b1 in zip(quads[:, 2], quads[:, 3])])
    return _PAM4_LEVELS[i_idx] + 1j * _PAM4_LEVELS[q_idx]


def demodulate(symbols, scheme: str = "QPSK") -> np.ndarray:
    """Minimum-distance demodulation back to a flat 0/1 array."""
    symbols = np.asarray(symbols, dtype=complex).ravel()
    if scheme == "QPSK":
        out = np.empty((symbols.size, 2), dtype=int)
        out[:, 0] = (symbols.real < 0).astype(int)
        out[:, 1] = (symbols.imag < 0).astype(int)
        return out.ravel()
    out = np.empty((symbols.size, 4), dtype=int)
    for axis, col in ((symbols.real, 0), (symbols.imag, 2)):
        idx = np.digitize(axis, (_PAM4_LEVELS[:-1] + _PAM4_LEVELS[1:]) / 2.0)
        for row, i in enumerate(idx):
            out[row, col], out[row, col + 1] = _PAM4_BITS[int(i)]
    return out.ravel()


def qfunc(x) -> np.ndarray:
    """Gaussian tail probability Q(x)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0)) if np.isscalar(x) else 0.5 * (
        np.vectorize(math.erfc)(np.asarray(x) / math.sqrt(2.0))
    )


def awgn_qpsk_ber(esn0_db: float) -> float:
    """Closed-form QPSK bit error rate on AWGN, Es/N0 per complex symbol."""
    return float(qfunc(math.sqrt(10.0 ** (esn0_db / 10.0))))


def wilson_interval(errors: int, bits: int, z: float = 1.959964) -> tuple[float, float]:
    """95% Wilson score interval for a binomial rate."""
    if bits <= 0:
        return (0.0, 1.0)
    p = errors / bits
    denom = 1.0 + z * z / bits
    center = (p + z * z / (2.0 * bits)) / denom
    half = z * math.sqrt(p * (1.0 - p) / bits + z * z / (4.0 * bits * bits)) / denom
    # the boundary cases are exact; avoid floating residue of center -+ half
    lo = 0.0 if errors == 0 else max(center - half, 0.0)
    hi = 1.0 if errors == bits else min(center + half, 1.0)
    return (lo, hi)


# ---------------------------------------------------------------------------
# Trials


def _trial_rng(master_seed: int, trial_index: int, purpose: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial_index, purpose))
    return np.random.default_rng(ss)


def downlink_trial(
    cfg: SimConfig,
    trial_index: int,
    eta: float | None = None,
    snr_db: float | None = None,
) -> TrialMetrics:
    """One seeded downlink realization.

    The true channel always carries the propagation; the configured CSI
    handling only decides what the precoder sees.
    """
    eta = cfg.eta[0] if eta is None else float(eta)
    snr_db = cfg.snr_db[0] if snr_db is None else float(snr_db)
    dims = cfg.dims
    q = cfg.q
    sigma2 = cfg.p_total * 10.0 ** (-snr_db / 10.0)

    rng_ch = _trial_rng(cfg.seed, trial_index, 0)
    rng_corr = _trial_rng(cfg.seed, trial_index, 1)
    rng_noise = _trial_rng(cfg.seed, trial_index, 2)
    rng_sym = _trial_rng(cfg.seed, trial_index, 3)

    H = gen_channel(dims, rng_ch)
    model = CorruptionModel(eta=eta, mode=cfg.corruption_mode, c=cfg.c)
    H_obs = corrupt(H, model, rng_corr)

    mse_csi = mse_noisy = d_eta = eta_hat = None
    converged = True
    if cfg.csi == "perfect":
        csi = H
    elif cfg.csi == "noisy_raw":
        csi = H_obs
    else:
        if cfg.csi == "ei_cleaned":
            est = estimate_eta(
                H_obs,
                q,
                EstimatorConfig(
                    order=cfg.estimator_order,
                    mode=cfg.theory_mode,
                    c=cfg.c,
                    data_mode=cfg.corruption_mode,
                ),
            )
            eta_hat = est.eta_hat
            d_eta = delta_eta(eta, est)
        else:
            eta_hat = eta
            d_eta = 0.0
        csi = clean_channel(
            H_obs,
            eta_hat,
            q,
            variant=cfg.rie_variant,
            mode=cfg.corruption_mode,
            c=cfg.c,
        )
        mse_csi = mse(H, csi)
        mse_noisy = mse(H, H_obs)

    # link-layer scale: unit-variance channel entries
    root_a = np.sqrt(dims.antennas)
    H_link = root_a * H
    csi_link = root_a * csi

    spec = precoding.make_quantizer(cfg.bits) if cfg.bits is not None else None
    if cfg.precoder == "WF":
        pout = precoding.wf_precode(csi_link, sigma2, cfg.p_total)
    elif cfg.precoder == "WFQ":
        pout, _ = precoding.wfq_precode(csi_link, sigma2, cfg.p_total, spec)
        converged = pout.converged
    else:
        pout = precoding.baseline_precode(
            cfg.precoder, csi_link, cfg.p_total, spec=spec, sigma2=sigma2
        )

    bps = _bits_per_symbol(cfg.modulation)
    n_bits = dims.users * cfg.symbols_per_trial * bps
    tx_bits = rng_sym.integers(0, 2, size=n_bits)
    s = modulate(tx_bits, cfg.modulation).reshape(dims.users, cfg.symbols_per_trial)

    x = precoding.transmit(pout, s, spec)
    noise = (
        rng_noise.standard_normal(s.shape) + 1j * rng_noise.standard_normal(s.shape)
    ) * np.sqrt(sigma2 / 2.0)
    y = H_link @ x + noise
    s_hat = pout.beta * y
    rx_bits = demodulate(s_hat.reshape(-1), cfg.modulation)
    errors = int(np.count_nonzero(rx_bits != demodulate(s.reshape(-1), cfg.modulation)))

    return TrialMetrics(
        trial_index=trial_index,
        bits_sent=n_bits,
        bit_errors=errors,
        mse_csi=mse_csi,
        mse_noisy=mse_noisy,
        delta_eta=d_eta,
        eta_hat=eta_hat,
        converged=converged,
        seed_key=(cfg.seed, trial_index),
    )


def _aggregate(metrics: list[TrialMetrics], cfg: SimConfig) -> Aggregate:
    bits = sum(m.bits_sent for m in metrics)
    errors = sum(m.bit_errors for m in metrics)
    ber = errors / bits if bits else 0.0
    lo, hi = wilson_interval(errors, bits)
    mses = [m.mse_csi for m in metrics if m.mse_csi is not None]
    mses_noisy = [m.mse_noisy for m in metrics if m.mse_noisy is not None]
    return Aggregate(
        bits=bits,
        errors=errors,
        ber=ber,
        ber_lo=lo,
        ber_hi=hi,
        trials_run=len(metrics),
        resolved=errors >= cfg.min_errors,
        mse_mean=float(np.mean(mses)) if mses else None,
        mse_noisy_mean=float(np.mean(mses_noisy)) if mses_noisy else None,
        delta_eta_values=tuple(m.delta_eta for m in metrics if m.delta_eta is not None),
        eta_hat_values=tuple(m.eta_hat for m in metrics if m.eta_hat is not None),
        all_converged=all(m.converged for m in metrics),
    )


def monte_carlo(
    cfg: SimConfig, eta: float | None = None, snr_db: float | None = None
) -> Aggregate:
    """Run trials until the error budget is met, deterministically.

    Trials are consumed in fixed chunks of 8 in index order; the thread
    width only parallelizes inside a chunk, so the aggregate is identical
    for any ``threads`` setting.  Stops at the first chunk boundary where
    bit errors >= min_errors or bits >= max_bits, or when ``trials`` is
    exhausted; ``resolved`` records whether the error target was met.
    """
    metrics: list[TrialMetrics] = []
    errors = 0
    bits = 0
    done = 0
    while done < cfg.trials and errors < cfg.min_errors and bits < cfg.max_bits:
        chunk = list(range(done, min(done + _CHUNK, cfg.trials)))
        try:
            if cfg.threads > 1:
                with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                    results = list(
                        pool.map(lambda t: downlink_trial(cfg, t, eta, snr_db), chunk)
                    )
            else:
                results = [downlink_trial(cfg, t, eta, snr_db) for t in chunk]
        except Exception as exc:
            raise MonteCarloError(
                f"trial in chunk starting at {done} failed: {exc}",
                done,
                _aggregate(metrics, cfg),
            ) from exc
        metrics.extend(results)
        errors += sum(m.bit_errors for m in results)
        bits += sum(m.bits_sent for m in results)
        done += len(chunk)
    return _aggregate(metrics, cfg)
