"""Dense non-Hermitian eigensolver wrapper and spectrum files."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.linalg import lapack

from .model import ModelParams

log = logging.getLogger(__name__)

RESIDUAL_SAMPLES = 32


class SolverError(RuntimeError):
    """The eigensolver failed; ``converged`` counts the eigenvalues it did find."""

    def __init__(self, message: str, converged: int):
        super().__init__(message)
        self.converged = converged


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in canonical order (ascending real part, then imaginary)."""

    eigenvalues: np.ndarray
    residual_max: float | None = None
    window: tuple[float, float] | None = None
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=complex).ravel()
        object.__setattr__(self, "eigenvalues", canonical_order(ev))

    def __len__(self) -> int:
        return self.eigenvalues.size

    @property
    def is_empty(self) -> bool:
        return self.eigenvalues.size == 0


def canonical_order(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    return values[np.lexsort((values.imag, values.real))]


def _check_info(info: int, n: int, routine: str) -> None:
    if info > 0:
        raise SolverError(
            f"eigensolver did not converge: {n - info} of {n} eigenvalues found", n - info
        )
    if info < 0:
        raise SolverError(f"illegal argument {-info} passed to {routine}", 0)


def _geev(matrix: np.ndarray, vectors: bool):
    """LAPACK ``zgeev`` or, for real input, ``dgeev``.

    ``dgeev`` returns conjugate pairs exactly and packs a pair's eigenvectors
    as ``(Re v, Im v)`` in adjacent columns; they are unpacked here.
    """
    n = matrix.shape[0]
    if np.isrealobj(matrix):
        a = np.array(matrix, dtype=float, order="F", copy=True)
        wr, wi, _, vr, info = lapack.dgeev(a, compute_vl=0, compute_vr=int(vectors), overwrite_a=1)
        _check_info(info, n, "dgeev")
        w = wr + 1j * wi
        if not vectors:
            return w, None
        v = vr.astype(complex)
        j = 0
        while j < n:
            if wi[j] != 0 and j + 1 < n:
                v[:, j] = vr[:, j] + 1j * vr[:, j + 1]
                v[:, j + 1] = vr[:, j] - 1j * vr[:, j + 1]
                j += 2
            else:
                j += 1
        return w, v
    a = np.array(matrix, dtype=complex, order="F", copy=True)
    w, _, vr, info = lapack.zgeev(a, compute_vl=0, compute_vr=int(vectors), overwrite_a=1)
    _check_info(info, n, "zgeev")
    return w, (vr if vectors else None)


def eigenvalues(
    matrix: np.ndarray,
    with_residuals: bool = False,
    seed: int = 0,
    source: dict | None = None,
) -> Spectrum:
    """All eigenvalues of a dense square matrix.

    Complex input goes to LAPACK ``zgeev`` and real input to ``dgeev``; both
    balance the matrix before the QR iteration. With
    ``with_residuals`` the right eigenvectors are also computed and the
    relative residual ``|Mv - Ev| / |v|`` is evaluated on up to 32 randomly
    chosen pairs, normalized by the largest entry of ``M``.
    """
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix contains non-finite entries")
    n = matrix.shape[0]
    if n == 0:
        return Spectrum(np.empty(0, complex), source=dict(source or {}))
    w, vr = _geev(matrix, with_residuals)
    residual = None
    if with_residuals:
        rng = np.random.default_rng(seed)
        picks = rng.choice(n, size=min(n, RESIDUAL_SAMPLES), replace=False)
        v = vr[:, picks]
        res = np.linalg.norm(matrix @ v - v * w[picks], axis=0) / np.linalg.norm(v, axis=0)
        scale = max(float(np.max(np.abs(matrix))), np.finfo(float).tiny)
        residual = float(np.max(res) / scale)
    return Spectrum(w, residual_max=residual, source=dict(source or {}))


def window_bounds(params: ModelParams, alpha: float) -> tuple[float, float]:
    if alpha < 0:
        raise ValueError(f"window coefficient must be >= 0, got {alpha}")
    return (-alpha * params.kappa * params.n_cutoff, 0.0)


def window_filter(spec: Spectrum, params: ModelParams, alpha: float = 2 / 3, tol: float = 1e-8) -> Spectrum:
    """Keep eigenvalues with ``Re E`` in ``[-alpha kappa n_cutoff, 0]``.

    Both ends are inclusive up to ``tol`` so that the steady state, whose
    real part is zero only to rounding, survives.
    """
    lo, hi = window_bounds(params, alpha)
    re = spec.eigenvalues.real
    keep = (re >= lo - tol) & (re <= hi + tol)
    out = replace(spec, eigenvalues=spec.eigenvalues[keep], window=(lo, hi))
    if out.is_empty:
        log.warning("spectral window [%g, %g] retained no eigenvalues", lo, hi)
    return out


def _format_meta(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return " ".join(_format_meta(v) for v in value)
    return str(value)


def write_spectrum(spec: Spectrum, path: str | Path, header: dict | None = None) -> None:
    """One ``re im`` line per eigenvalue, 17 significant digits."""
    meta = dict(header or {})
    meta.update({f"source.{k}": v for k, v in spec.source.items()})
    if spec.window is not None:
        meta["window"] = spec.window
    if spec.residual_max is not None:
        meta["residual_max"] = spec.residual_max
    meta["count"] = len(spec)
    with open(path, "w") as fh:
        for key in sorted(meta):
            fh.write(f"# {key} = {_format_meta(meta[key])}\n")
        for z in spec.eigenvalues:
            fh.write(f"{z.real:.16e} {z.imag:.16e}\n")


def read_spectrum(path: str | Path) -> tuple[Spectrum, dict]:
    """Inverse of :func:`write_spectrum`; header values are returned as strings."""
    meta: dict[str, str] = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].partition("=")
                if sep:
                    meta[key.strip()] = value.strip()
                continue
            re_, im_ = line.split()
            rows.append(complex(float(re_), float(im_)))
    window = None
    if "window" in meta:
        lo, hi = (float(x) for x in meta["window"].split())
        window = (lo, hi)
    residual = float(meta["residual_max"]) if "residual_max" in meta else None
    return Spectrum(np.array(rows, dtype=complex), residual_max=residual, window=window), meta


def multiset_distance(a, b) -> float:
    """Bottleneck distance between two equal-size multisets of complex numbers.

    When mapping every ``a`` to its nearest ``b`` is a bijection, that
    matching is optimal and its largest gap is returned directly. Otherwise
    the largest gap of a minimum-sum assignment is returned, which bounds the
    bottleneck distance from above.
    """
    from scipy.optimize import linear_sum_assignment
    from scipy.spatial import cKDTree

    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size != b.size:
        raise ValueError(f"multisets differ in size: {a.size} vs {b.size}")
    if a.size == 0:
        return 0.0
    pa = np.column_stack([a.real, a.imag])
    pb = np.column_stack([b.real, b.imag])
    dist, idx = cKDTree(pb).query(pa)
    if np.unique(idx).size == idx.size:
        return float(dist.max())
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())
