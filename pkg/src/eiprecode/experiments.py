"""Experiment families over the Monte-Carlo engine.

Each family emits one CSV table (plot-ready, byte-deterministic for a fixed
config and seed) and one JSON summary (config echo, version, headline
numbers, wall time).  The wall-time key is the only nondeterministic output
field and lives nowhere else.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .channel import CorruptionModel, SystemDims, build_bsca, corrupt, gen_channel
from .eta import EstimatorConfig, estimate_eta
from .linksim import SNR_DEFINITION, SimConfig, _trial_rng, monte_carlo
from .rie import clean_channel, mse
from .rmt import bsca_density, bsca_support

__all__ = [
    "ExperimentError",
    "ExperimentResult",
    "run_experiment",
    "threshold_crossing",
    "EXPERIMENT_KINDS",
]

EXPERIMENT_KINDS = (
    "spectrum_check",
    "eta_cdf",
    "mse_vs_antennas",
    "ber_vs_snr",
    "ber_vs_eta",
)


class ExperimentError(ValueError):
    """A config is incomplete or inconsistent for the requested experiment."""


def _version_string() -> str:
    from . import __version__

    return f"eiprecode-{__version__}"


def _fmt(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _round(v: float) -> float:
    # keeps JSON floats in the same precision regime as the CSV
    return float(format(float(v), ".10g"))


@dataclass(frozen=True)
class ExperimentResult:
    kind: str
    header: tuple
    rows: tuple
    summary: dict
    config: SimConfig

    def csv_text(self) -> str:
        echo = "; ".join(
            f"{k}={_fmt(v)}" for k, v in sorted(asdict(self.config).items())
        )
        lines = [
            f"# {_version_string()} {self.kind}",
            f"# {SNR_DEFINITION}",
            f"# config: {echo}",
            ",".join(self.header),
        ]
        lines.extend(",".join(_fmt(v) for v in row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def json_text(self) -> str:
        doc = {
            "experiment": self.kind,
            "version": _version_string(),
            "seed": self.config.seed,
            "snr_definition": SNR_DEFINITION,
            "config": asdict(self.config),
            **self.summary,
        }
        return json.dumps(doc, sort_keys=True, indent=2, default=_fmt) + "\n"

    def write(self, outdir) -> tuple:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{self.kind}.csv"
        json_path = out / f"{self.kind}.json"
        csv_path.write_text(self.csv_text())
        json_path.write_text(self.json_text())
        return csv_path, json_path


def threshold_crossing(xs, ys, target: float):
    """First x at which the piecewise-log-linear curve (xs, ys) crosses target.

    Scans adjacent pairs in the given order; pairs containing nonpositive or
    nonfinite y are skipped.  Returns None when no pair brackets the target.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be 1-d arrays of equal length")
    lt = np.log(target)
    for i in range(len(xs) - 1):
        y0, y1 = ys[i], ys[i + 1]
        if not (np.isfinite(y0) and np.isfinite(y1)) or y0 <= 0 or y1 <= 0:
            continue
        l0, l1 = np.log(y0), np.log(y1)
        if l0 == l1:
            if l0 == lt:
                return float(xs[i])
            continue
        t = (lt - l0) / (l1 - l0)
        if 0.0 <= t <= 1.0:
            return float(xs[i] + t * (xs[i + 1] - xs[i]))
    return None


def _map_trials(cfg: SimConfig, fn):
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(fn, range(cfg.trials)))
    return [fn(t) for t in range(cfg.trials)]


def _spectrum_check(cfg: SimConfig, bins: int) -> ExperimentResult:
    dims = cfg.dims
    a_edge, b_edge, atom = bsca_support(cfg.q)
    edges = np.linspace(-b_edge, b_edge, bins + 1)
    width = edges[1] - edges[0]
    centers = 0.5 * (edges[:-1] + edges[1:])

    def one(t: int):
        rng = _trial_rng(cfg.seed, t, 0)
        w = np.linalg.eigvalsh(build_bsca(gen_channel(dims, rng)))
        zero = np.abs(w) <= 1e-10 * np.abs(w).max()
        counts, _ = np.histogram(w[~zero], bins=edges)
        return counts, int(zero.sum())

    results = _map_trials(cfg, one)
    counts = np.sum([r[0] for r in results], axis=0)
    zero_counts = [r[1] for r in results]
    n_eigs = dims.users + dims.antennas
    density = counts / (cfg.trials * n_eigs * width)
    analytic = np.array([bsca_density(c, cfg.q) for c in centers])
    l1 = float(np.sum(np.abs(density - analytic)) * width)

    rows = tuple(
        (_round(c), _round(d), _round(an))
        for c, d, an in zip(centers, density, analytic)
    )
    expected_zeros = dims.antennas - dims.users
    summary = {
        "wall_time_s": None,  # patched by run_experiment
        "headline": {
            "l1_distance": _round(l1),
            "zero_eigenvalues_per_draw": zero_counts[0] if len(set(zero_counts)) == 1 else zero_counts,
            "expected_zero_eigenvalues": expected_zeros,
            "zeros_ok": all(z == expected_zeros for z in zero_counts),
            "support": [_round(a_edge), _round(b_edge)],
            "zero_mass": _round(atom),
            "draws": cfg.trials,
            "bins": bins,
        },
    }
    return ExperimentResult(
        "spectrum_check",
        ("bin_center", "empirical_density", "analytic_density"),
        rows,
        summary,
        cfg,
    )


def _eta_cdf(cfg: SimConfig) -> ExperimentResult:
    dims = cfg.dims
    est_cfg = EstimatorConfig(
        order=cfg.estimator_order,
        mode=cfg.theory_mode,
        c=cfg.c,
        data_mode=cfg.corruption_mode,
    )
    rows = []
    headline = {}
    for eta in cfg.eta:
        model = CorruptionModel(eta=eta, mode=cfg.corruption_mode, c=cfg.c)

        def one(t: int, _model=model):
            H = gen_channel(dims, _trial_rng(cfg.seed, t, 0))
            H_obs = corrupt(H, _model, _trial_rng(cfg.seed, t, 1))
            est = estimate_eta(H_obs, dims.q, est_cfg)
            return abs(est.eta_hat - _model.eta), est.eta_hat, est.identifiable

        results = _map_trials(cfg, one)
        deltas = np.sort(np.array([r[0] for r in results]))
        cdf = np.arange(1, len(deltas) + 1) / len(deltas)
        rows.extend(
            (_round(eta), _round(d), _round(p)) for d, p in zip(deltas, cdf)
        )
        headline[f"eta={_fmt(eta)}"] = {
            "p95_delta_eta": _round(np.quantile(deltas, 0.95)),
            "prob_delta_below_0.05": _round(np.mean(deltas < 0.05)),
            "median_delta_eta": _round(np.median(deltas)),
            "mean_eta_hat": _round(np.mean([r[1] for r in results])),
            "identifiable_fraction": _round(np.mean([r[2] for r in results])),
        }
    headline["estimator_order"] = est_cfg.order if est_cfg.order is not None else "auto"
    headline["theory_mode"] = cfg.theory_mode
    summary = {"wall_time_s": None, "headline": headline}
    return ExperimentResult(
        "eta_cdf", ("eta", "delta_eta", "cdf"), tuple(rows), summary, cfg
    )


def _mse_vs_antennas(cfg: SimConfig) -> ExperimentResult:
    if cfg.antennas_grid is None:
        raise ExperimentError("mse_vs_antennas requires config field 'antennas_grid'")
    if cfg.csi not in ("ei_cleaned", "ei_cleaned_known_eta"):
        raise ExperimentError(
            "mse_vs_antennas requires csi of 'ei_cleaned' or 'ei_cleaned_known_eta'"
        )
    blind = cfg.csi == "ei_cleaned"
    rows = []
    headline = {}
    for eta in cfg.eta:
        model = CorruptionModel(eta=eta, mode=cfg.corruption_mode, c=cfg.c)
        means = []
        for antennas in cfg.antennas_grid:
            dims = SystemDims(cfg.users, antennas)
            est_cfg = EstimatorConfig(
                order=cfg.estimator_order,
                mode=cfg.theory_mode,
                c=cfg.c,
                data_mode=cfg.corruption_mode,
            )
            # scalar conditional-mean coefficient for the configured model
            if cfg.corruption_mode == "damped":
                scal = np.sqrt(1.0 - eta)
            else:
                scal = 1.0 / (1.0 + model.alpha() ** 2)

            def one(t: int, _dims=dims, _model=model, _scal=scal):
                H = gen_channel(_dims, _trial_rng(cfg.seed, t, 0))
                H_obs = corrupt(H, _model, _trial_rng(cfg.seed, t, 1))
                eta_hat = (
                    estimate_eta(H_obs, _dims.q, est_cfg).eta_hat
                    if blind
                    else _model.eta
                )
                H_hat = clean_channel(
                    H_obs,
                    eta_hat,
                    _dims.q,
                    variant=cfg.rie_variant,
                    mode=cfg.corruption_mode,
                    c=cfg.c,
                )
                return (
                    mse(H, H_hat),
                    mse(H, H_obs),
                    mse(H, _scal * H_obs),
                )

            results = np.array(_map_trials(cfg, one))
            m_clean, m_noisy, m_scalar = results.mean(axis=0)
            win = float(np.mean(results[:, 0] <= results[:, 1]))
            floor = eta / antennas
            means.append(m_clean)
            rows.append(
                (
                    _round(eta),
                    antennas,
                    _round(m_clean),
                    _round(m_noisy),
                    _round(m_scalar),
                    _round(floor),
                    _round(win),
                    cfg.trials,
                    cfg.seed,
                )
            )
        headline[f"eta={_fmt(eta)}"] = {
            "nonincreasing_in_antennas": bool(
                all(means[i + 1] <= means[i] for i in range(len(means) - 1))
            ),
            "mse_cleaned_by_antennas": [_round(v) for v in means],
            "ratio_to_floor_last": _round(
                means[-1] / (eta / cfg.antennas_grid[-1])
            ),
        }
    headline["csi"] = cfg.csi
    headline["rie_variant"] = cfg.rie_variant
    summary = {"wall_time_s": None, "headline": headline}
    header = (
        "eta",
        "antennas",
        "mse_cleaned",
        "mse_noisy",
        "mse_scalar_mmse",
        "mmse_floor",
        "win_fraction",
        "trials",
        "seed",
    )
    return ExperimentResult("mse_vs_antennas", header, tuple(rows), summary, cfg)


_BER_HEADER = (
    "snr_db",
    "precoder",
    "csi_mode",
    "bits",
    "ber",
    "ber_lo",
    "ber_hi",
    "trials",
    "seed",
)


def _ber_vs_snr(cfg: SimConfig) -> ExperimentResult:
    rows = []
    bers = []
    unresolved = []
    for snr in cfg.snr_db:
        agg = monte_carlo(cfg, eta=cfg.eta[0], snr_db=snr)
        bers.append(agg.ber)
        if not agg.resolved:
            unresolved.append(_round(snr))
        rows.append(
            (
                _round(snr),
                cfg.precoder,
                cfg.csi,
                cfg.bits if cfg.bits is not None else "bypass",
                _round(agg.ber),
                _round(agg.ber_lo),
                _round(agg.ber_hi),
                agg.trials_run,
                cfg.seed,
            )
        )
    crossing = threshold_crossing(cfg.snr_db, bers, 1e-3)
    summary = {
        "wall_time_s": None,
        "headline": {
            "eta": _round(cfg.eta[0]),
            "snr_at_ber_1e-3": None if crossing is None else _round(crossing),
            "unresolved_snr_db": unresolved,
        },
    }
    return ExperimentResult("ber_vs_snr", _BER_HEADER, tuple(rows), summary, cfg)


def _ber_vs_eta(cfg: SimConfig) -> ExperimentResult:
    rows = []
    bers = []
    unresolved = []
    for eta in cfg.eta:
        agg = monte_carlo(cfg, eta=eta, snr_db=cfg.snr_db[0])
        bers.append(agg.ber)
        if not agg.resolved:
            unresolved.append(_round(eta))
        rows.append(
            (
                _round(eta),
                _round(cfg.snr_db[0]),
                cfg.precoder,
                cfg.csi,
                cfg.bits if cfg.bits is not None else "bypass",
                _round(agg.ber),
                _round(agg.ber_lo),
                _round(agg.ber_hi),
                agg.trials_run,
                cfg.seed,
            )
        )
    crossing = threshold_crossing(cfg.eta, bers, 1e-3)
    summary = {
        "wall_time_s": None,
        "headline": {
            "snr_db": _round(cfg.snr_db[0]),
            "eta_at_ber_1e-3": None if crossing is None else _round(crossing),
            "unresolved_eta": unresolved,
        },
    }
    header = ("eta",) + _BER_HEADER
    return ExperimentResult("ber_vs_eta", header, tuple(rows), summary, cfg)


def run_experiment(kind: str, cfg: SimConfig, bins: int = 50) -> ExperimentResult:
    """Run one experiment family and return its tables and summary."""
    t0 = time.perf_counter()
    if kind == "spectrum_check":
        if bins < 2:
            raise ExperimentError("spectrum_check requires config field 'bins' >= 2")
        result = _spectrum_check(cfg, bins)
    elif kind == "eta_cdf":
        result = _eta_cdf(cfg)
    elif kind == "mse_vs_antennas":
        result = _mse_vs_antennas(cfg)
    elif kind == "ber_vs_snr":
        result = _ber_vs_snr(cfg)
    elif kind == "ber_vs_eta":
        result = _ber_vs_eta(cfg)
    else:
        raise ExperimentError(
            f"unknown experiment kind {kind!r}; expected one of {EXPERIMENT_KINDS}"
        )
    result.summary["wall_time_s"] = round(time.perf_counter() - t0, 3)
    return result
