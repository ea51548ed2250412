"""End-to-end runs: Liouvillian -> sector spectrum -> window -> statistics.

Every emitted file starts with ``#`` comment lines holding the resolved
run configuration, so artifacts are self-describing. Nothing time- or
host-dependent is written; identical configs give byte-identical files.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import stats
from .eig import Spectrum, eigenvalues, window_filter, write_spectrum
from .liouville import (
    DEFAULT_MAX_DENSE_DIM,
    DEFAULT_MAX_LIOUVILLE_DIM,
    SECTORS,
    DimensionError,
    assemble_liouvillian,
    project_sector,
    real_representation,
)
from .model import ModelParams, critical_coupling

log = logging.getLogger(__name__)

STEADY_STATE_TOL = 1e-8


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams = field(default_factory=ModelParams)
    window_alpha: float = 2 / 3
    sector: str = "even"
    s_max: float = stats.DEFAULT_S_MAX
    bins: int = stats.DEFAULT_BINS
    bandwidth_factor: float = stats.DEFAULT_BANDWIDTH_FACTOR
    include_steady_state: bool = True
    sweep: tuple[float, ...] | None = None
    convergence: tuple[int, ...] | None = None
    seed: int = 0
    workers: int = 1
    output_dir: Path = Path("out")
    force_large: bool = False

    def __post_init__(self):
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if self.sector not in SECTORS:
            raise ValueError(f"sector must be one of {SECTORS}, got {self.sector!r}")
        if not self.window_alpha >= 0:
            raise ValueError(f"window_alpha must be >= 0, got {self.window_alpha}")
        if self.bins < 1:
            raise ValueError(f"bins must be >= 1, got {self.bins}")
        if not self.s_max > 0:
            raise ValueError(f"s_max must be > 0, got {self.s_max}")
        if not self.bandwidth_factor > 0:
            raise ValueError(f"bandwidth_factor must be > 0, got {self.bandwidth_factor}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.sweep is not None:
            sweep = tuple(float(x) for x in self.sweep)
            if not sweep:
                raise ValueError("sweep list is empty")
            if any(x < 0 for x in sweep):
                raise ValueError("sweep couplings must be >= 0")
            if any(b <= a for a, b in zip(sweep, sweep[1:])):
                raise ValueError("sweep couplings must be strictly increasing")
            object.__setattr__(self, "sweep", sweep)
        if self.convergence is not None:
            cuts = tuple(int(x) for x in self.convergence)
            if len(cuts) < 2:
                raise ValueError("convergence study needs at least 2 cutoffs")
            if any(c < 1 for c in cuts):
                raise ValueError("cutoffs must be >= 1")
            if any(b <= a for a, b in zip(cuts, cuts[1:])):
                raise ValueError("cutoffs must be strictly ascending and distinct")
            object.__setattr__(self, "convergence", cuts)

    def as_flat_dict(self) -> dict:
        out = {f"model.{k}": v for k, v in self.model.as_dict().items()}
        out.update(
            {
                "spectrum.window_alpha": self.window_alpha,
                "spectrum.sector": self.sector,
                "stats.s_max": self.s_max,
                "stats.bins": self.bins,
                "stats.bandwidth_factor": self.bandwidth_factor,
                "stats.include_steady_state": self.include_steady_state,
                "run.seed": self.seed,
                "run.force_large": self.force_large,
            }
        )
        if self.sweep is not None:
            out["run.sweep"] = list(self.sweep)
        if self.convergence is not None:
            out["run.convergence"] = list(self.convergence)
        return out


def _header_lines(config: RunConfig) -> list[str]:
    return [f"{k} = {_fmt(v)}" for k, v in sorted(config.as_flat_dict().items())]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_fmt(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class SpacingStats:
    count: int
    unfolded: stats.UnfoldedSpacings
    histogram: stats.HistogramDensity
    ratios: stats.RatioSamples
    eta: float
    mean_r: float
    mean_cos_theta: float
    degenerate: int
    steady_state_removed: bool = False

    def summary(self) -> dict:
        return {
            "eta": self.eta,
            "mean_r": self.mean_r,
            "mean_cos_theta": self.mean_cos_theta,
            "minus_mean_cos_theta": -self.mean_cos_theta,
            "n_eigenvalues": self.count,
            "degenerate": self.degenerate,
        }


def analyze_spectrum(
    spec: Spectrum,
    s_max: float = stats.DEFAULT_S_MAX,
    bins: int = stats.DEFAULT_BINS,
    bandwidth_factor: float = stats.DEFAULT_BANDWIDTH_FACTOR,
    include_steady_state: bool = True,
    keep=None,
) -> SpacingStats:
    """Unfolded spacing histogram, eta, and spacing-ratio means of a spectrum.

    ``keep`` optionally restricts the sampled eigenvalues (a boolean mask
    over ``spec.eigenvalues``); neighbours and density still use them all.
    """
    values = spec.eigenvalues
    if keep is not None:
        keep = np.asarray(keep, dtype=bool)
        if keep.shape != values.shape:
            raise ValueError(f"keep mask has shape {keep.shape}, expected {values.shape}")
    removed = False
    if not include_steady_state and values.size:
        i = int(np.argmin(np.abs(values)))
        if abs(values[i]) < STEADY_STATE_TOL:
            values = np.delete(values, i)
            keep = None if keep is None else np.delete(keep, i)
            removed = True
    if values.size < 3:
        raise ValueError(f"need at least 3 eigenvalues for statistics, got {values.size}")
    unfolded = stats.unfold(values, bandwidth_factor=bandwidth_factor, keep=keep)
    hist = stats.spacing_histogram(unfolded, s_max=s_max, bins=bins)
    ratios = stats.spacing_ratios(values, keep=keep)
    mean_r, mean_cos = stats.ratio_summary(ratios)
    return SpacingStats(
        count=int(unfolded.raw.size),
        unfolded=unfolded,
        histogram=hist,
        ratios=ratios,
        eta=stats.eta_metric(hist),
        mean_r=mean_r,
        mean_cos_theta=mean_cos,
        degenerate=unfolded.degenerate,
        steady_state_removed=removed,
    )


def sector_spectrum(config: RunConfig, method: str = "real") -> Spectrum:
    """All eigenvalues of the configured parity block of the Liouvillian.

    ``method="real"`` diagonalizes the block in the Hermitian operator basis
    (a real matrix, same eigenvalues, about 3x faster than the complex
    solve); ``method="complex"`` solves the block as assembled.
    """
    L = assemble_liouvillian(
        config.model, max_dim=None if config.force_large else DEFAULT_MAX_LIOUVILLE_DIM
    )
    block = L if config.sector == "full" else project_sector(L, config.sector)
    limit = None if config.force_large else DEFAULT_MAX_DENSE_DIM
    if method == "real":
        if limit is not None and block.dim > limit:
            raise DimensionError(
                f"refusing to densify a {block.dim}x{block.dim} matrix (limit {limit}); "
                "override the dimension guard to proceed"
            )
        dense = real_representation(block).toarray()
    elif method == "complex":
        dense = block.to_dense(max_dim=limit)
    else:
        raise ValueError(f"method must be 'real' or 'complex', got {method!r}")
    log.info("diagonalizing %s block of dimension %d", config.sector, block.dim)
    source = {f"model.{k}": v for k, v in config.model.as_dict().items()}
    source["sector"] = config.sector
    return eigenvalues(dense, source=source)


@dataclass(frozen=True)
class PointResult:
    config: RunConfig
    spectrum: Spectrum
    windowed: Spectrum
    stats: SpacingStats
    files: dict[str, Path]


def stats_document(result_stats: SpacingStats, config: RunConfig, window) -> dict:
    hist = result_stats.histogram
    unf = result_stats.unfolded
    return {
        "config": config.as_flat_dict(),
        "model": {
            "critical_coupling": critical_coupling(config.model),
            "hilbert_dim": config.model.hilbert_dim,
            "liouville_dim": config.model.liouville_dim,
        },
        "window": {"re_min": window[0], "re_max": window[1]} if window else None,
        "summary": result_stats.summary(),
        "unfolding": {
            "sigma": unf.sigma,
            "global_mean_raw": unf.global_mean_raw,
            "normalizer": unf.normalizer,
            "steady_state_removed": result_stats.steady_state_removed,
        },
        "histogram": {
            "s_max": float(hist.bin_edges[-1]),
            "bins": int(hist.density.size),
            "sample_count": hist.sample_count,
            "overflow": hist.overflow,
            "midpoints": hist.midpoints.tolist(),
            "density": hist.density.tolist(),
        },
    }


def _clean_json(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean_json(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(doc: dict, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(_clean_json(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_histogram_csv(hist: stats.HistogramDensity, path: Path, header: list[str]) -> None:
    ref_p = stats.pdf_2d_poisson(hist.midpoints)
    ref_g = stats.pdf_ginue(hist.midpoints)
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["s", "density", "pdf_2d_poisson", "pdf_ginue"])
        for row in zip(hist.midpoints, hist.density, ref_p, ref_g):
            writer.writerow([repr(float(x)) for x in row])


def write_ratios_csv(ratios: stats.RatioSamples, path: Path, header: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["re_z", "im_z", "r", "theta"])
        for z, r, th in zip(ratios.z, ratios.r, ratios.theta):
            writer.writerow([repr(float(z.real)), repr(float(z.imag)), repr(float(r)), repr(float(th))])


def run_point(config: RunConfig, output_dir: Path | None = None) -> PointResult:
    """Diagonalize one parameter point and write its artifacts."""
    out = Path(output_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = sector_spectrum(config)
    windowed = window_filter(spec, config.model, config.window_alpha)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", stats.DegeneracyWarning)
        result_stats = analyze_spectrum(
            windowed,
            s_max=config.s_max,
            bins=config.bins,
            bandwidth_factor=config.bandwidth_factor,
            include_steady_state=config.include_steady_state,
        )
    for w in caught:
        log.warning("coupling=%g: %s", config.model.coupling, w.message)
        if not issubclass(w.category, stats.DegeneracyWarning):
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)

    header = _header_lines(config)
    meta = dict(line.split(" = ", 1) for line in header)
    files = {
        "spectrum": out / "spectrum.dat",
        "sector_spectrum": out / "sector_spectrum.dat",
        "stats": out / "stats.json",
        "histogram": out / "histogram.csv",
        "ratios": out / "ratios.csv",
    }
    write_spectrum(windowed, files["spectrum"], meta)
    write_spectrum(spec, files["sector_spectrum"], meta)
    write_json(stats_document(result_stats, config, windowed.window), files["stats"])
    write_histogram_csv(result_stats.histogram, files["histogram"], header)
    write_ratios_csv(result_stats.ratios, files["ratios"], header)
    log.info(
        "coupling=%g: N=%d eta=%.4f <r>=%.4f -<cos>=%.4f",
        config.model.coupling,
        result_stats.count,
        result_stats.eta,
        result_stats.mean_r,
        -result_stats.mean_cos_theta,
    )
    return PointResult(config, spec, windowed, result_stats, files)


SWEEP_COLUMNS = [
    "lambda",
    "eta",
    "mean_r",
    "mean_cos_theta",
    "minus_mean_cos_theta",
    "n_eigenvalues",
    "degenerate",
    "status",
]


def _point_dir(root: Path, key: str, value) -> Path:
    return root / f"{key}_{value}"


def _sweep_row(args):
    config, lam = args
    point = replace(config, model=config.model.replace(coupling=lam), sweep=None, convergence=None)
    try:
        res = run_point(point, _point_dir(config.output_dir, "lambda", repr(lam)))
    except Exception as exc:  # partial results are kept; the caller reports failures
        log.error("coupling=%g failed: %s", lam, exc)
        return {"lambda": lam, "status": f"error: {type(exc).__name__}: {exc}"}, exc
    s = res.stats.summary()
    return {"lambda": lam, **s, "status": "ok"}, None


@dataclass(frozen=True)
class TableResult:
    rows: list[dict]
    path: Path
    errors: list[Exception]


def _map_rows(func, jobs, workers: int):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, jobs))
    return [func(job) for job in jobs]


def _write_table(path: Path, columns: list[str], rows: list[dict], header: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_sweep(config: RunConfig) -> TableResult:
    """One point per coupling in ``config.sweep``; rows are kept in coupling order."""
    if not config.sweep:
        raise ValueError("run_sweep needs a non-empty sweep list")
    config.output_dir.mkdir(parents=True, exist_ok=True)
    results = _map_rows(_sweep_row, [(config, lam) for lam in config.sweep], config.workers)
    rows = [r for r, _ in results]
    errors = [e for _, e in results if e is not None]
    path = config.output_dir / "sweep.csv"
    _write_table(path, SWEEP_COLUMNS, rows, _header_lines(config))
    return TableResult(rows, path, errors)


CONVERGENCE_COLUMNS = [
    "n_cutoff",
    "mean_r",
    "mean_cos_theta",
    "eta",
    "n_eigenvalues",
    "delta_mean_r",
    "delta_mean_cos_theta",
    "delta_eta",
    "status",
]


def _convergence_row(args):
    config, cutoff = args
    point = replace(config, model=config.model.replace(n_cutoff=cutoff), sweep=None, convergence=None)
    try:
        res = run_point(point, _point_dir(config.output_dir, "ncut", cutoff))
    except Exception as exc:
        log.error("n_cutoff=%d failed: %s", cutoff, exc)
        return {"n_cutoff": cutoff, "status": f"error: {type(exc).__name__}: {exc}"}, exc
    return {"n_cutoff": cutoff, **res.stats.summary(), "status": "ok"}, None


def run_convergence(config: RunConfig) -> TableResult:
    """Repeat a point over ascending cavity cutoffs, window rescaled per cutoff."""
    if not config.convergence or len(config.convergence) < 2:
        raise ValueError("run_convergence needs at least 2 cutoffs")
    config.output_dir.mkdir(parents=True, exist_ok=True)
    results = _map_rows(_convergence_row, [(config, c) for c in config.convergence], config.workers)
    rows = [r for r, _ in results]
    errors = [e for _, e in results if e is not None]
    for prev, cur in zip(rows, rows[1:]):
        for key in ("mean_r", "mean_cos_theta", "eta"):
            if key in prev and key in cur:
                cur[f"delta_{key}"] = cur[key] - prev[key]
    path = config.output_dir / "convergence.csv"
    _write_table(path, CONVERGENCE_COLUMNS, rows, _header_lines(config))
    return TableResult(rows, path, errors)
