"""Command-line driver.

Without ``--sweep`` or ``--convergence`` a single point is run. Settings
come from built-in defaults, then an optional ``--config`` file, then
command-line flags (flags win).

Config files hold ``section.key = value`` lines where ``key`` is the
long flag name without dashes, e.g.::

    # desk-scale superradiant point
    model.lambda = 1.0
    model.spin-count = 6
    spectrum.window-alpha = 0.6666666666666666
    run.sweep = 0.2,0.4,0.6
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .eig import SolverError, read_spectrum, write_spectrum
from .ensembles import bulk_mask, sample_ginue, sample_poisson2d
from .liouville import DEFAULT_MAX_LIOUVILLE_DIM, DimensionError, assemble_liouvillian, write_sparse_text
from .model import ModelParams
from .pipeline import (
    RunConfig,
    _header_lines,
    analyze_spectrum,
    run_convergence,
    run_point,
    run_sweep,
    stats_document,
    write_histogram_csv,
    write_json,
)

log = logging.getLogger("dickespec")

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.replace(" ", "").split(",") if x]


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(" ", "").split(",") if x]


def _bool(text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# flag name -> (config section, parser)
OPTIONS = {
    "omega-c": ("model", float),
    "omega-s": ("model", float),
    "kappa": ("model", float),
    "lambda": ("model", float),
    "spin-count": ("model", int),
    "n-cutoff": ("model", int),
    "window-alpha": ("spectrum", float),
    "sector": ("spectrum", str),
    "s-max": ("stats", float),
    "bins": ("stats", int),
    "bandwidth-factor": ("stats", float),
    "include-steady-state": ("stats", _bool),
    "sweep": ("run", _float_list),
    "convergence": ("run", _int_list),
    "seed": ("run", int),
    "workers": ("run", int),
    "out": ("run", str),
    "force-large": ("run", _bool),
}


class ConfigError(ValueError):
    pass


def read_config_file(path: str | Path) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected 'section.key = value'")
            section, dot, name = key.strip().partition(".")
            name = name.replace("_", "-")
            if not dot or name not in OPTIONS or OPTIONS[name][0] != section:
                raise ConfigError(f"{path}:{lineno}: unknown key {key.strip()!r}")
            try:
                values[name] = OPTIONS[name][1](value.strip())
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dickespec",
        description="Liouvillian spectra and complex spacing statistics of the dissipative Dicke model.",
    )
    p.add_argument("--config", help="key-value config file (flags override it)")
    g = p.add_argument_group("model")
    g.add_argument("--omega-c", type=float, help="cavity frequency (default 1)")
    g.add_argument("--omega-s", type=float, help="spin splitting (default 1)")
    g.add_argument("--kappa", type=float, help="cavity decay rate (default 1)")
    g.add_argument("--lambda", dest="lambda_", type=float, help="cavity-spin coupling (default 0)")
    g.add_argument("--spin-count", type=int, help="number of two-level systems S (default 6)")
    g.add_argument("--n-cutoff", type=int, help="largest cavity occupation (default 16)")
    g = p.add_argument_group("spectrum")
    g.add_argument("--window-alpha", type=float, help="keep Re E in [-alpha kappa n_cutoff, 0] (default 2/3)")
    g.add_argument("--sector", choices=["even", "odd", "full"], help="parity block (default even)")
    g.add_argument("--force-large", action="store_const", const=True, help="bypass the dimension guard")
    g.add_argument("--export-liouvillian", metavar="PATH", help="also write the full sparse Liouvillian")
    g = p.add_argument_group("statistics")
    g.add_argument("--s-max", type=float, help="histogram range (default 5)")
    g.add_argument("--bins", type=int, help="histogram bins (default 100)")
    g.add_argument("--bandwidth-factor", type=float, help="KDE width / mean spacing (default 4.5)")
    g.add_argument(
        "--include-steady-state",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="keep the E=0 eigenvalue in the statistics (default yes)",
    )
    g = p.add_argument_group("runs")
    g.add_argument("--sweep", type=_float_list, help="comma-separated couplings")
    g.add_argument("--convergence", type=_int_list, help="comma-separated ascending cutoffs")
    g.add_argument("--seed", type=int, help="random seed (residual sampling, ensembles)")
    g.add_argument("--workers", type=int, help="parallel sweep rows (default 1)")
    g.add_argument("--out", help="output directory (default ./out)")
    g = p.add_argument_group("reference spectra")
    g.add_argument("--ensemble", choices=["ginue", "poisson2d"], help="analyze a synthetic spectrum instead")
    g.add_argument("--ensemble-size", type=int, default=1000, help="matrix size / point count")
    g.add_argument("--from-spectrum", metavar="PATH", help="analyze an existing spectrum file")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    cli = {
        "omega-c": args.omega_c,
        "omega-s": args.omega_s,
        "kappa": args.kappa,
        "lambda": args.lambda_,
        "spin-count": args.spin_count,
        "n-cutoff": args.n_cutoff,
        "window-alpha": args.window_alpha,
        "sector": args.sector,
        "s-max": args.s_max,
        "bins": args.bins,
        "bandwidth-factor": args.bandwidth_factor,
        "include-steady-state": args.include_steady_state,
        "sweep": args.sweep,
        "convergence": args.convergence,
        "seed": args.seed,
        "workers": args.workers,
        "out": args.out,
        "force-large": args.force_large,
    }
    values.update({k: v for k, v in cli.items() if v is not None})
    defaults = RunConfig()
    base = defaults.model
    model = ModelParams(
        omega_c=values.get("omega-c", base.omega_c),
        omega_s=values.get("omega-s", base.omega_s),
        kappa=values.get("kappa", base.kappa),
        coupling=values.get("lambda", base.coupling),
        spin_count=values.get("spin-count", base.spin_count),
        n_cutoff=values.get("n-cutoff", base.n_cutoff),
    )
    return replace(
        defaults,
        model=model,
        window_alpha=values.get("window-alpha", defaults.window_alpha),
        sector=values.get("sector", defaults.sector),
        s_max=values.get("s-max", defaults.s_max),
        bins=values.get("bins", defaults.bins),
        bandwidth_factor=values.get("bandwidth-factor", defaults.bandwidth_factor),
        include_steady_state=values.get("include-steady-state", defaults.include_steady_state),
        sweep=values.get("sweep"),
        convergence=values.get("convergence"),
        seed=values.get("seed", defaults.seed),
        workers=values.get("workers", defaults.workers),
        output_dir=Path(values.get("out", defaults.output_dir)),
        force_large=values.get("force-large", defaults.force_large),
    )


def _print_summary(label: str, summary: dict) -> None:
    print(
        f"{label}: N={summary['n_eigenvalues']} eta={summary['eta']:.4f} "
        f"<r>={summary['mean_r']:.4f} <cos theta>={summary['mean_cos_theta']:.4f} "
        f"-<cos theta>={summary['minus_mean_cos_theta']:.4f} degenerate={summary['degenerate']}"
    )


def _analyze_external(config: RunConfig, args) -> int:
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    keep = None
    if args.from_spectrum:
        spec, _ = read_spectrum(args.from_spectrum)
        label = str(args.from_spectrum)
    elif args.ensemble == "ginue":
        spec = sample_ginue(args.ensemble_size, config.seed)
        keep = bulk_mask(spec, args.ensemble_size)
        label = f"ginue n={args.ensemble_size} bulk"
    else:
        spec = sample_poisson2d(args.ensemble_size, config.seed)
        label = f"poisson2d n={args.ensemble_size}"
    res = analyze_spectrum(
        spec,
        s_max=config.s_max,
        bins=config.bins,
        bandwidth_factor=config.bandwidth_factor,
        include_steady_state=config.include_steady_state,
        keep=keep,
    )
    header = _header_lines(config) + [f"input = {label}"]
    write_spectrum(spec, out / "spectrum.dat", dict(line.split(" = ", 1) for line in header))
    doc = stats_document(res, config, spec.window)
    doc["input"] = label
    write_json(doc, out / "stats.json")
    write_histogram_csv(res.histogram, out / "histogram.csv", header)
    _print_summary(label, res.summary())
    return EXIT_OK


def _run(config: RunConfig, args) -> int:
    if args.from_spectrum or args.ensemble:
        return _analyze_external(config, args)
    if args.export_liouvillian:
        L = assemble_liouvillian(config.model, max_dim=None if config.force_large else DEFAULT_MAX_LIOUVILLE_DIM)
        write_sparse_text(L.matrix, args.export_liouvillian, _header_lines(config))
    if config.sweep is not None and config.convergence is not None:
        raise ConfigError("choose either --sweep or --convergence, not both")
    if config.sweep is not None:
        table = run_sweep(config)
    elif config.convergence is not None:
        table = run_convergence(config)
    else:
        res = run_point(config)
        _print_summary(f"lambda={config.model.coupling:g}", res.stats.summary())
        print(f"wrote {len(res.files)} files to {config.output_dir}")
        return EXIT_OK
    for row in table.rows:
        key = "lambda" if "lambda" in row else "n_cutoff"
        if row["status"] == "ok":
            _print_summary(f"{key}={row[key]:g}", row)
        else:
            print(f"{key}={row[key]:g}: {row['status']}")
    print(f"wrote {table.path}")
    if table.errors:
        raise table.errors[0]
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
        return _run(config, args)
    except (DimensionError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"solver error: {exc} (converged: {exc.converged})", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
