"""Liouvillian of the dissipative Dicke model in the operator basis.

Liouville states are the operators ``|n_l, m_l><n_r, m_r|``. The flat index
of a state is ``l * d + r`` where ``l`` and ``r`` are canonical Hilbert
indices and ``d`` is the Hilbert dimension (left index major).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .model import (
    HilbertBasis,
    ModelParams,
    build_hamiltonian,
    enumerate_basis,
    number_operator,
    op_cavity_annihilation,
)

log = logging.getLogger(__name__)

DEFAULT_MAX_LIOUVILLE_DIM = 1_000_000
DEFAULT_MAX_DENSE_DIM = 20_000

SECTORS = ("full", "even", "odd")


class DimensionError(ValueError):
    """Raised when a requested matrix exceeds the configured size budget."""


@dataclass(frozen=True)
class LiouvilleBasis:
    hilbert: HilbertBasis

    @property
    def dim(self) -> int:
        return self.hilbert.dim**2

    @cached_property
    def left(self) -> np.ndarray:
        return np.repeat(np.arange(self.hilbert.dim), self.hilbert.dim)

    @cached_property
    def right(self) -> np.ndarray:
        return np.tile(np.arange(self.hilbert.dim), self.hilbert.dim)

    @cached_property
    def parities(self) -> np.ndarray:
        """zeta = +1 when (n_l + m_l) - (n_r + m_r) is even."""
        h = self.hilbert
        twice_excess = 2 * h.n + h.two_m
        diff = twice_excess[self.left] - twice_excess[self.right]
        return np.where(diff % 4 == 0, 1, -1).astype(np.int8)

    @cached_property
    def diagonal_states(self) -> np.ndarray:
        """Flat indices of ``|l><l|``, the states entering the trace."""
        d = self.hilbert.dim
        return np.arange(d) * (d + 1)

    @property
    def states(self) -> list[tuple[int, float, int, float]]:
        h = self.hilbert
        return [
            (int(h.n[l]), h.two_m[l] / 2, int(h.n[r]), h.two_m[r] / 2)
            for l, r in zip(self.left, self.right)
        ]

    def sector_indices(self, sector: str) -> np.ndarray:
        if sector == "full":
            return np.arange(self.dim)
        if sector == "even":
            return np.flatnonzero(self.parities == 1)
        if sector == "odd":
            return np.flatnonzero(self.parities == -1)
        raise ValueError(f"sector must be one of {SECTORS}, got {sector!r}")


def enumerate_liouville_basis(basis: HilbertBasis) -> LiouvilleBasis:
    return LiouvilleBasis(basis)


@dataclass(frozen=True)
class LiouvillianMatrix:
    """Sparse Liouvillian restricted to a parity sector.

    ``indices`` holds the flat Liouville indices of the retained states, in
    the order of the matrix rows.
    """

    matrix: sp.csr_matrix
    params: ModelParams
    basis: LiouvilleBasis
    sector: str = "full"
    indices: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def to_dense(self, max_dim: int | None = DEFAULT_MAX_DENSE_DIM) -> np.ndarray:
        if max_dim is not None and self.dim > max_dim:
            raise DimensionError(
                f"refusing to densify a {self.dim}x{self.dim} matrix (limit {max_dim}); "
                "override the dimension guard to proceed"
            )
        return self.matrix.toarray()


def assemble_liouvillian(
    params: ModelParams, max_dim: int | None = DEFAULT_MAX_LIOUVILLE_DIM
) -> LiouvillianMatrix:
    """Assemble ``L = -i[H, .] + kappa (2 a . a^dag - {a^dag a, .})``.

    Element-wise,

        L[(l,r),(l',r')] = -i (H[l,l'] d[r,r'] - d[l,l'] H[r',r])
                           + kappa (2 a[l,l'] conj(a[r,r'])
                                    - N[l,l'] d[r,r'] - d[l,l'] N[r',r])

    with ``N = a^dag a``. With the left-major flat index this is
    ``kron(X, I)`` for left actions and ``kron(I, X.T)`` for right actions.
    """
    basis = enumerate_basis(params)
    lbasis = enumerate_liouville_basis(basis)
    if max_dim is not None and lbasis.dim > max_dim:
        raise DimensionError(
            f"Liouville dimension {lbasis.dim} exceeds the assembly limit {max_dim}"
        )
    d = basis.dim
    eye = sp.identity(d, dtype=complex, format="csr")
    H = build_hamiltonian(params, basis)
    a = op_cavity_annihilation(basis)
    N = number_operator(basis)

    left = -1j * H + (-params.kappa) * N
    right = 1j * H + (-params.kappa) * N
    L = (
        sp.kron(left, eye, format="csr")
        + sp.kron(eye, right.T, format="csr")
        + (2.0 * params.kappa) * sp.kron(a, a.conj(), format="csr")
    ).tocsr()
    L.sum_duplicates()
    L.eliminate_zeros()
    L.sort_indices()
    log.debug("assembled Liouvillian: dim=%d nnz=%d", L.shape[0], L.nnz)
    return LiouvillianMatrix(matrix=L, params=params, basis=lbasis, sector="full")


def project_sector(L: LiouvillianMatrix, sector: str) -> LiouvillianMatrix:
    """Principal submatrix on one parity sector, reindexed densely."""
    if L.sector != "full":
        raise ValueError(f"can only project the full Liouvillian, got sector {L.sector!r}")
    idx = L.basis.sector_indices(sector)
    block = L.matrix[idx][:, idx].tocsr()
    return LiouvillianMatrix(
        matrix=block, params=L.params, basis=L.basis, sector=sector, indices=idx
    )


def hermitian_basis(L: LiouvillianMatrix) -> sp.csr_matrix:
    """Unitary change of basis onto Hermitian operators within ``L``'s sector.

    Columns are ``|l><l|``, ``(|l><r| + |r><l|)/sqrt2`` and
    ``i(|l><r| - |r><l|)/sqrt2`` for ``l < r``. Both members of such a pair
    share a parity, so the sector is closed under the change. Because the
    Liouvillian maps Hermitian operators to Hermitian operators, ``U^H L U``
    is real.
    """
    lb = L.basis
    d = lb.hilbert.dim
    idx = np.arange(lb.dim) if L.indices is None else L.indices
    pos = np.full(lb.dim, -1, dtype=np.intp)
    pos[idx] = np.arange(idx.size)
    left, right = lb.left[idx], lb.right[idx]
    diag = idx[left == right]
    upper = idx[left < right]
    mirror = lb.right[upper] * d + lb.left[upper]
    if np.any(pos[mirror] < 0):
        raise ValueError("sector is not closed under operator adjoint")
    n_diag, n_pair = diag.size, upper.size
    h = 1.0 / np.sqrt(2.0)
    sym_cols = n_diag + 2 * np.arange(n_pair)
    anti_cols = sym_cols + 1
    rows = np.concatenate([pos[diag], pos[upper], pos[mirror], pos[upper], pos[mirror]])
    cols = np.concatenate([np.arange(n_diag), sym_cols, sym_cols, anti_cols, anti_cols])
    vals = np.concatenate(
        [np.ones(n_diag), np.full(n_pair, h), np.full(n_pair, h), np.full(n_pair, 1j * h), np.full(n_pair, -1j * h)]
    )
    return sp.csr_matrix((vals.astype(complex), (rows, cols)), shape=(idx.size, idx.size))


def real_representation(L: LiouvillianMatrix, tol: float = 1e-12) -> sp.csr_matrix:
    """``L`` in the Hermitian operator basis, as a real sparse matrix."""
    U = hermitian_basis(L)
    M = (U.conj().T @ L.matrix @ U).tocsr()
    M.sum_duplicates()
    if M.nnz and np.max(np.abs(M.data.imag)) > tol * max(1.0, np.max(np.abs(M.data))):
        raise ValueError("Liouvillian is not Hermiticity preserving in this sector")
    R = sp.csr_matrix((M.data.real, M.indices, M.indptr), shape=M.shape)
    R.eliminate_zeros()
    return R


def verify_weak_symmetry(L: LiouvillianMatrix) -> float:
    """Largest entry magnitude linking opposite-parity states (0.0 if none)."""
    if L.sector != "full":
        raise ValueError("weak-symmetry check needs the full Liouvillian")
    coo = L.matrix.tocoo()
    zeta = L.basis.parities
    cross = zeta[coo.row] != zeta[coo.col]
    if not np.any(cross):
        return 0.0
    return float(np.max(np.abs(coo.data[cross])))


def trace_defect(L: LiouvillianMatrix) -> np.ndarray:
    """Per-column sums over the diagonal states ``|l><l|``.

    A trace-preserving generator gives zero for every column.
    """
    if L.sector != "full":
        raise ValueError("trace check needs the full Liouvillian")
    rows = L.matrix[L.basis.diagonal_states]
    return np.asarray(rows.sum(axis=0)).ravel()


def write_sparse_text(matrix: sp.spmatrix, path: str | Path, header: list[str] | None = None) -> None:
    """Write ``dim nnz`` then one ``row col re im`` line per stored entry."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    rows, cols, data = coo.row[order], coo.col[order], coo.data[order]
    with open(path, "w") as fh:
        for line in header or ():
            fh.write(f"# {line}\n")
        fh.write(f"{coo.shape[0]} {coo.nnz}\n")
        for r, c, v in zip(rows, cols, data):
            fh.write(f"{r} {c} {v.real:.17g} {v.imag:.17g}\n")


def read_sparse_text(path: str | Path) -> sp.csr_matrix:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    dim, nnz = (int(x) for x in lines[0].split())
    if nnz == 0:
        return sp.csr_matrix((dim, dim), dtype=complex)
    table = np.loadtxt(lines[1:], ndmin=2)
    if table.shape[0] != nnz:
        raise ValueError(f"expected {nnz} entries, found {table.shape[0]}")
    data = table[:, 2] + 1j * table[:, 3]
    return sp.csr_matrix((data, (table[:, 0].astype(int), table[:, 1].astype(int))), shape=(dim, dim))
