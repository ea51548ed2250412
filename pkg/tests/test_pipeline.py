import csv
import json
import logging

import numpy as np
import pytest

from dickespec.eig import Spectrum, multiset_distance, read_spectrum
from dickespec.liouville import DimensionError, assemble_liouvillian, project_sector
from dickespec.model import ModelParams
from dickespec.pipeline import (
    RunConfig,
    analyze_spectrum,
    run_convergence,
    run_point,
    run_sweep,
    sector_spectrum,
)

SMALL = ModelParams(coupling=0.8, spin_count=2, n_cutoff=5)


def read_csv_rows(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


@pytest.mark.parametrize("sector", ["even", "odd", "full"])
def test_real_and_complex_paths_agree(sector):
    config = RunConfig(model=SMALL, sector=sector)
    a = sector_spectrum(config, method="real").eigenvalues
    b = sector_spectrum(config, method="complex").eigenvalues
    assert a.size == b.size
    assert multiset_distance(a, b) < 1e-9
    # the real path returns exact conjugate pairs
    assert multiset_distance(a, a.conj()) < 1e-12


def test_sector_dimension():
    config = RunConfig(model=SMALL)
    even = sector_spectrum(config)
    L = assemble_liouvillian(SMALL)
    assert len(even) == project_sector(L, "even").dim


def test_dense_guard(monkeypatch):
    import dickespec.pipeline as pipeline

    monkeypatch.setattr(pipeline, "DEFAULT_MAX_DENSE_DIM", 10)
    with pytest.raises(DimensionError):
        sector_spectrum(RunConfig(model=SMALL))
    assert len(sector_spectrum(RunConfig(model=SMALL, force_large=True))) > 10


def test_unknown_method():
    with pytest.raises(ValueError):
        sector_spectrum(RunConfig(model=SMALL), method="arpack")


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(sweep=[]),
        dict(sweep=[0.5, 0.2]),
        dict(sweep=[-0.1, 0.2]),
        dict(sweep=[0.2, 0.2]),
        dict(convergence=[8]),
        dict(convergence=[12, 8]),
        dict(convergence=[8, 8]),
        dict(sector="both"),
        dict(bins=0),
        dict(window_alpha=-1),
        dict(workers=0),
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        RunConfig(**kwargs)


def test_run_point_artifacts(tmp_path):
    config = RunConfig(model=SMALL, output_dir=tmp_path)
    res = run_point(config)
    for name in ("spectrum.dat", "sector_spectrum.dat", "stats.json", "histogram.csv", "ratios.csv"):
        assert (tmp_path / name).exists()
    for name in ("spectrum.dat", "histogram.csv", "ratios.csv"):
        text = (tmp_path / name).read_text()
        assert "# model.coupling = 0.8" in text
        assert "# spectrum.window_alpha = 0.6666666666666666" in text
    doc = json.loads((tmp_path / "stats.json").read_text())
    assert doc["config"]["model.spin_count"] == 2
    assert doc["summary"]["eta"] == pytest.approx(res.stats.eta)
    assert doc["summary"]["n_eigenvalues"] == len(res.windowed)
    back, meta = read_spectrum(tmp_path / "spectrum.dat")
    np.testing.assert_array_equal(back.eigenvalues, res.windowed.eigenvalues)
    lo, hi = back.window
    assert lo == pytest.approx(-2 / 3 * 5) and hi == 0.0
    assert np.all(back.eigenvalues.real >= lo - 1e-8)
    hist = read_csv_rows(tmp_path / "histogram.csv")
    assert len(hist) == 100
    assert set(hist[0]) == {"s", "density", "pdf_2d_poisson", "pdf_ginue"}


def test_run_point_deterministic(tmp_path):
    config = RunConfig(model=SMALL)
    run_point(config, tmp_path / "a")
    run_point(config, tmp_path / "b")
    for name in ("spectrum.dat", "stats.json", "histogram.csv", "ratios.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_steady_state_exclusion():
    spec = Spectrum(np.array([0.0, -1 + 1j, -1 - 1j, -2 + 0.5j, -2 - 0.5j, -0.5 + 0j]))
    kept = analyze_spectrum(spec, include_steady_state=True)
    dropped = analyze_spectrum(spec, include_steady_state=False)
    assert kept.count == 6 and dropped.count == 5
    assert dropped.steady_state_removed and not kept.steady_state_removed


def test_analyze_needs_three():
    with pytest.raises(ValueError):
        analyze_spectrum(Spectrum(np.array([0j, 1j])))


def test_zero_coupling_warns_degeneracy(tmp_path, caplog):
    config = RunConfig(model=SMALL.replace(coupling=0.0), output_dir=tmp_path)
    with caplog.at_level(logging.WARNING):
        res = run_point(config)
    assert res.stats.degenerate > 0
    assert "degenera" in caplog.text.lower()


def test_single_value_sweep(tmp_path):
    config = RunConfig(model=SMALL, sweep=[0.8], output_dir=tmp_path)
    table = run_sweep(config)
    rows = read_csv_rows(table.path)
    assert len(rows) == 1 and rows[0]["status"] == "ok"
    point = run_point(RunConfig(model=SMALL), tmp_path / "direct")
    assert float(rows[0]["eta"]) == point.stats.eta
    assert (tmp_path / "lambda_0.8" / "stats.json").exists()


def test_sweep_rows_in_order(tmp_path):
    config = RunConfig(model=SMALL, sweep=[0.3, 0.6, 1.2], output_dir=tmp_path)
    rows = read_csv_rows(run_sweep(config).path)
    assert [float(r["lambda"]) for r in rows] == [0.3, 0.6, 1.2]
    assert "# run.sweep = 0.3,0.6,1.2" in (tmp_path / "sweep.csv").read_text()


def test_sweep_keeps_partial_results(tmp_path, monkeypatch):
    import dickespec.pipeline as pipeline

    real = pipeline.run_point

    def flaky(config, output_dir=None):
        if config.model.coupling == 0.6:
            raise RuntimeError("boom")
        return real(config, output_dir)

    monkeypatch.setattr(pipeline, "run_point", flaky)
    table = run_sweep(RunConfig(model=SMALL, sweep=[0.3, 0.6, 1.2], output_dir=tmp_path))
    assert [r["status"] for r in table.rows] == ["ok", "error: RuntimeError: boom", "ok"]
    assert len(table.errors) == 1


def test_convergence_table(tmp_path):
    config = RunConfig(model=SMALL, convergence=[4, 5], output_dir=tmp_path)
    table = run_convergence(config)
    rows = read_csv_rows(table.path)
    assert [int(r["n_cutoff"]) for r in rows] == [4, 5]
    assert rows[0]["delta_mean_r"] == ""
    assert float(rows[1]["delta_mean_r"]) == pytest.approx(
        float(rows[1]["mean_r"]) - float(rows[0]["mean_r"])
    )
    # each cutoff gets its own rescaled window
    back, _ = read_spectrum(tmp_path / "ncut_4" / "spectrum.dat")
    assert back.window[0] == pytest.approx(-2 / 3 * 4)


def test_analyze_with_mask_and_steady_state_removal():
    ev = np.concatenate([[0.0], -np.arange(1, 40) * (0.3 + 0.7j), -np.arange(1, 40) * (0.5 - 0.2j)])
    spec = Spectrum(ev)
    keep = spec.eigenvalues.real > -8
    res = analyze_spectrum(spec, keep=keep, include_steady_state=False)
    assert res.steady_state_removed
    assert res.count == keep.sum() - 1
    with pytest.raises(ValueError):
        analyze_spectrum(spec, keep=keep[:-1])
