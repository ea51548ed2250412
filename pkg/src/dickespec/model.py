"""Hilbert space of the truncated Dicke model and its operators.

States are ``|n, m>`` with cavity occupation ``n = 0..n_cutoff`` and
spin projection ``m = -S/2..S/2`` of the totally symmetric spin ``j = S/2``.
The spin projection is stored as the integer ``2m`` so that odd ``S``
(half-integer ``m``) never produces float keys.

Ordering is n-major, m ascending. Every index convention downstream relies
on it.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

SparseComplexMatrix = sp.csr_matrix


@dataclass(frozen=True)
class ModelParams:
    """Physical couplings and truncation of the dissipative Dicke model."""

    omega_c: float = 1.0
    omega_s: float = 1.0
    kappa: float = 1.0
    coupling: float = 0.0
    spin_count: int = 6
    n_cutoff: int = 16

    def __post_init__(self):
        for name in ("omega_c", "omega_s", "kappa", "coupling"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.omega_c <= 0:
            raise ValueError(f"omega_c must be > 0, got {self.omega_c}")
        if self.omega_s <= 0:
            raise ValueError(f"omega_s must be > 0, got {self.omega_s}")
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.coupling < 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling}")
        for name in ("spin_count", "n_cutoff"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    @property
    def hilbert_dim(self) -> int:
        return (self.n_cutoff + 1) * (self.spin_count + 1)

    @property
    def liouville_dim(self) -> int:
        return self.hilbert_dim**2

    def replace(self, **changes) -> "ModelParams":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return ModelParams(**fields)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class HilbertBasis:
    """Canonically ordered product basis ``|n, m>``.

    Attributes
    ----------
    n : ndarray of int
        Cavity occupation of each state.
    two_m : ndarray of int
        Twice the spin projection of each state.
    spin_count : int
        Number of two-level systems ``S``.
    n_cutoff : int
        Largest retained cavity occupation.
    """

    n: np.ndarray
    two_m: np.ndarray
    spin_count: int
    n_cutoff: int

    @property
    def dim(self) -> int:
        return int(self.n.size)

    @property
    def m(self) -> np.ndarray:
        return self.two_m / 2.0

    @property
    def states(self) -> list[tuple[int, float]]:
        return [(int(n), tm / 2) for n, tm in zip(self.n, self.two_m)]

    def index(self, n: int, m: float) -> int:
        two_m = int(round(2 * m))
        if not (0 <= n <= self.n_cutoff) or abs(two_m) > self.spin_count or (two_m + self.spin_count) % 2:
            raise KeyError((n, m))
        return n * (self.spin_count + 1) + (two_m + self.spin_count) // 2

    @cached_property
    def parity(self) -> np.ndarray:
        """Eigenvalues of ``exp[i pi (a^dag a + S^z + S/2)]`` as a +-1 vector."""
        excitations = self.n + (self.two_m + self.spin_count) // 2
        return np.where(excitations % 2 == 0, 1, -1).astype(np.int8)


def enumerate_basis(params: ModelParams) -> HilbertBasis:
    S = params.spin_count
    n = np.repeat(np.arange(params.n_cutoff + 1), S + 1)
    two_m = np.tile(np.arange(-S, S + 1, 2), params.n_cutoff + 1)
    return HilbertBasis(n=n, two_m=two_m, spin_count=S, n_cutoff=params.n_cutoff)


def _ladder(basis: HilbertBasis, rows: np.ndarray, cols: np.ndarray, vals: np.ndarray):
    return sp.csr_matrix(
        (vals.astype(complex), (rows, cols)), shape=(basis.dim, basis.dim)
    )


def op_cavity_annihilation(basis: HilbertBasis) -> sp.csr_matrix:
    """Truncated annihilation operator, ``<n-1, m| a |n, m> = sqrt(n)``."""
    cols = np.flatnonzero(basis.n > 0)
    rows = cols - (basis.spin_count + 1)
    return _ladder(basis, rows, cols, np.sqrt(basis.n[cols].astype(float)))


def op_spin_raising(basis: HilbertBasis) -> sp.csr_matrix:
    S = basis.spin_count
    cols = np.flatnonzero(basis.two_m < S)
    rows = cols + 1
    # 4[j(j+1) - m(m+1)] = S(S+2) - 2m(2m+2)
    tm = basis.two_m[cols]
    vals = np.sqrt((S * (S + 2) - tm * (tm + 2)).astype(float)) / 2.0
    return _ladder(basis, rows, cols, vals)


def op_spin(basis: HilbertBasis, axis: str) -> sp.csr_matrix:
    """Collective spin operator ``S^x``, ``S^y`` or ``S^z`` on the product space."""
    if axis == "z":
        return sp.diags(basis.two_m / 2.0, format="csr", dtype=complex)
    sp_plus = op_spin_raising(basis)
    sp_minus = sp_plus.conj().T.tocsr()
    if axis == "x":
        return ((sp_plus + sp_minus) * 0.5).tocsr()
    if axis == "y":
        return ((sp_plus - sp_minus) * (-0.5j)).tocsr()
    raise ValueError(f"axis must be one of 'x', 'y', 'z', got {axis!r}")


def number_operator(basis: HilbertBasis) -> sp.csr_matrix:
    """``a^dag a`` formed as a product of the truncated ladder matrices."""
    a = op_cavity_annihilation(basis)
    return (a.conj().T @ a).tocsr()


def build_hamiltonian(params: ModelParams, basis: HilbertBasis | None = None) -> sp.csr_matrix:
    """``H = w_c a^dag a + w_s S^z + (2 lam / sqrt(S)) (a^dag + a) S^x``."""
    basis = basis if basis is not None else enumerate_basis(params)
    a = op_cavity_annihilation(basis)
    x_field = a + a.conj().T
    H = (
        params.omega_c * number_operator(basis)
        + params.omega_s * op_spin(basis, "z")
        + (2.0 * params.coupling / np.sqrt(params.spin_count)) * (x_field @ op_spin(basis, "x"))
    )
    H = H.tocsr()
    H.sum_duplicates()
    H.eliminate_zeros()
    return H


def critical_coupling(params: ModelParams) -> float:
    """Location of the dissipative superradiant transition."""
    wc, ws, k = params.omega_c, params.omega_s, params.kappa
    return 0.5 * np.sqrt(wc * ws) * np.sqrt(1.0 + k**2 / wc**2)
