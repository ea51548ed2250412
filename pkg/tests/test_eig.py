import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dickespec.eig import (
    SolverError,
    Spectrum,
    eigenvalues,
    multiset_distance,
    read_spectrum,
    window_bounds,
    window_filter,
    write_spectrum,
)
from dickespec.ensembles import ginibre_matrix
from dickespec.model import ModelParams

small = st.integers(2, 12)
finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


def random_complex(n, seed):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def test_diagonal():
    spec = eigenvalues(np.diag([1 + 2j, -3]))
    assert multiset_distance(spec.eigenvalues, [1 + 2j, -3]) == 0.0


def test_rotation_generator():
    spec = eigenvalues(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    assert multiset_distance(spec.eigenvalues, [1j, -1j]) < 1e-15


def test_ginibre_residuals():
    spec = eigenvalues(ginibre_matrix(100, seed=3), with_residuals=True)
    assert len(spec) == 100
    assert spec.residual_max < 1e-10


def test_real_input_residuals():
    rng = np.random.default_rng(1)
    spec = eigenvalues(rng.normal(size=(60, 60)), with_residuals=True)
    assert spec.residual_max < 1e-10
    ev = spec.eigenvalues
    assert multiset_distance(ev, ev.conj()) == 0.0


def test_canonical_ordering():
    spec = Spectrum(np.array([1 + 0j, 0 + 1j, 0 - 1j, -2 + 0j]))
    np.testing.assert_array_equal(spec.eigenvalues, [-2, -1j, 1j, 1])


@settings(max_examples=20)
@given(small, st.integers(0, 2**32 - 1))
def test_hermitian_gives_real_eigenvalues(n, seed):
    a = random_complex(n, seed)
    h = a + a.conj().T
    assert np.max(np.abs(h - h.conj().T)) == 0.0
    assert np.max(np.abs(eigenvalues(h).eigenvalues.imag)) < 1e-10


@settings(max_examples=20)
@given(small, st.integers(0, 2**32 - 1))
def test_trace_and_permutation_invariance(n, seed):
    m = random_complex(n, seed)
    ev = eigenvalues(m).eigenvalues
    assert abs(ev.sum() - np.trace(m)) < 1e-8 * n * np.max(np.abs(m))
    perm = np.random.default_rng(seed).permutation(n)
    ev_perm = eigenvalues(m[perm][:, perm]).eigenvalues
    assert multiset_distance(ev, ev_perm) < 1e-10


@given(arrays(complex, (3, 3), elements=st.complex_numbers(max_magnitude=5, allow_nan=False)))
def test_count_matches_dimension(m):
    assert len(eigenvalues(m)) == 3


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        eigenvalues(np.ones((2, 3)))
    with pytest.raises(ValueError):
        eigenvalues(np.array([[np.nan, 0], [0, 1]]))


def test_solver_error_carries_count():
    err = SolverError("x", converged=7)
    assert err.converged == 7 and isinstance(err, RuntimeError)


@pytest.mark.parametrize(
    "n_cutoff, expected",
    [(40, (-80 / 3, 0.0)), (16, (-32 / 3, 0.0))],
)
def test_window_bounds(n_cutoff, expected):
    lo, hi = window_bounds(ModelParams(kappa=1.0, n_cutoff=n_cutoff), 2 / 3)
    assert lo == pytest.approx(expected[0], rel=1e-14)
    assert hi == 0.0


def test_window_filter_keeps_inclusive_range():
    params = ModelParams(kappa=1.0, n_cutoff=3)
    spec = Spectrum(np.array([1e-15, -1.0 + 2j, -2.0, -2.0000001, -5 + 1j, 0.5]))
    out = window_filter(spec, params, alpha=2 / 3)
    assert out.window == (-2.0, 0.0)
    assert multiset_distance(out.eigenvalues, [1e-15, -1 + 2j, -2.0]) == 0.0


def test_window_zero_alpha_keeps_steady_state_only():
    params = ModelParams(kappa=1.0, n_cutoff=3)
    spec = Spectrum(np.array([-3e-14 + 0j, -0.5 + 1j, -1.0]))
    out = window_filter(spec, params, alpha=0.0)
    assert len(out) == 1 and abs(out.eigenvalues[0]) < 1e-12


def test_window_empty_is_flagged(caplog):
    out = window_filter(Spectrum(np.array([-10.0 + 0j])), ModelParams(n_cutoff=1), alpha=0.5)
    assert out.is_empty
    assert "no eigenvalues" in caplog.text


def test_spectrum_file_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    values = rng.normal(size=50) + 1j * rng.normal(size=50)
    spec = Spectrum(values, window=(-2.5, 0.0), source={"kind": "test"})
    path = tmp_path / "spec.dat"
    write_spectrum(spec, path, header={"model.kappa": 1.0})
    text = path.read_text().splitlines()
    assert all(line.startswith("#") for line in text[:4])
    body = [ln for ln in text if not ln.startswith("#")]
    assert len(body) == 50
    mantissa = body[0].split()[0].split("e")[0].lstrip("-").replace(".", "")
    assert len(mantissa) == 17
    back, meta = read_spectrum(path)
    np.testing.assert_array_equal(back.eigenvalues, spec.eigenvalues)
    assert back.window == (-2.5, 0.0)
    assert meta["model.kappa"] == "1.0"
    assert meta["source.kind"] == "test"


def test_multiset_distance_fallback():
    a = np.array([0, 0, 1 + 0j])
    b = np.array([0, 2j, 1.05])
    # nearest-neighbour map is not a bijection; some point must travel to 2j
    assert multiset_distance(a, b) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        multiset_distance([1], [1, 2])
