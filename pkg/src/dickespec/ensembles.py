"""Reference spectra: Ginibre matrices, planar Poisson points, and the
exactly solvable decoupled (zero coupling) Liouvillian.

Random streams
--------------
All randomness comes from the counter-based Philox-4x64 generator with a
128-bit key ``(seed, stream_id)``: ``stream_id`` is 1 for Ginibre and 2 for
planar Poisson. Substream ``k`` of a key is the same generator advanced by
``k * 2**128`` draws (``Philox.jumped(k)``), so shards never overlap.

Uniform doubles are ``(x >> 11) * 2**-53`` for each raw 64-bit output ``x``
(numpy's ``Generator.random``). Gaussians use Box-Muller on consecutive
uniform pairs ``(u1, u2)``::

    R = sqrt(-2 log(1 - u1)),   g = R * (cos(2 pi u2) + i sin(2 pi u2))

which yields one complex normal with unit-variance real and imaginary
parts.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eig import Spectrum, eigenvalues
from .liouville import enumerate_liouville_basis
from .model import ModelParams, enumerate_basis

STREAM_IDS = {"ginue": 1, "poisson2d": 2}
BULK_FRACTION = 0.85

_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class EnsembleDescriptor:
    kind: str
    size: int = 0
    seed: int = 0
    params: ModelParams | None = None

    def __post_init__(self):
        if self.kind not in ("ginue", "poisson2d", "decoupled_dicke"):
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if not 0 <= int(self.seed) <= _U64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def as_dict(self) -> dict:
        out = {"kind": self.kind, "size": self.size, "seed": self.seed}
        if self.params is not None:
            out.update({f"params.{k}": v for k, v in self.params.as_dict().items()})
        return out


def generator(seed: int, kind: str, substream: int = 0) -> np.random.Generator:
    bitgen = np.random.Philox(key=[int(seed) & _U64, STREAM_IDS[kind]])
    if substream:
        bitgen = bitgen.jumped(substream)
    return np.random.Generator(bitgen)


def complex_normals(rng: np.random.Generator, count: int) -> np.ndarray:
    u = rng.random(2 * count)
    radius = np.sqrt(-2.0 * np.log1p(-u[0::2]))
    phase = 2.0 * np.pi * u[1::2]
    return radius * np.cos(phase) + 1j * (radius * np.sin(phase))


def ginibre_matrix(n: int, seed: int) -> np.ndarray:
    """``n x n`` matrix of i.i.d. complex Gaussians with ``E|g|^2 = 1``.

    Filled row by row from substream 0.
    """
    g = complex_normals(generator(seed, "ginue"), n * n) / np.sqrt(2.0)
    return g.reshape(n, n)


def sample_ginue(n: int, seed: int = 0) -> Spectrum:
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    desc = EnsembleDescriptor("ginue", n, seed)
    return eigenvalues(ginibre_matrix(n, seed), source=desc.as_dict())


def sample_poisson2d(n: int, seed: int = 0) -> Spectrum:
    """``n`` uniform points on the square ``[0, sqrt(n)]^2`` (unit density).

    Point ``i`` takes uniforms ``2i`` (real part) and ``2i + 1`` (imaginary).
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    u = generator(seed, "poisson2d").random(2 * n) * np.sqrt(n)
    desc = EnsembleDescriptor("poisson2d", n, seed)
    return Spectrum(u[0::2] + 1j * u[1::2], source=desc.as_dict())


def bulk_mask(spec: Spectrum, n: int, fraction: float = BULK_FRACTION) -> np.ndarray:
    """Boolean mask of Ginibre eigenvalues with ``|E| < fraction * sqrt(n)``.

    Prefer passing this as ``keep`` to the statistics over cutting the
    spectrum with :func:`bulk_filter`: a cut spectrum has a fresh edge at
    the cut radius, where neighbours are missing and the kernel density
    is underestimated.
    """
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    return np.abs(spec.eigenvalues) < fraction * np.sqrt(n)


def bulk_filter(spec: Spectrum, n: int, fraction: float = BULK_FRACTION) -> Spectrum:
    """Drop Ginibre eigenvalues outside ``|E| < fraction * sqrt(n)``."""
    keep = bulk_mask(spec, n, fraction)
    source = dict(spec.source, bulk_fraction=fraction)
    return Spectrum(spec.eigenvalues[keep], residual_max=spec.residual_max, source=source)


def decoupled_spectrum(params: ModelParams, sector: str = "full") -> Spectrum:
    """Closed-form Liouvillian eigenvalues at zero coupling.

    The jump term strictly lowers ``n_l + n_r``, so the Liouvillian is block
    triangular in that grading and its eigenvalues are the diagonal entries
    ``-i w_c (n_l - n_r) - i w_s (m_l - m_r) - kappa (n_l + n_r)``.
    """
    if params.coupling != 0:
        raise ValueError("decoupled spectrum requires coupling == 0")
    lb = enumerate_liouville_basis(enumerate_basis(params))
    h = lb.hilbert
    idx = lb.sector_indices(sector)
    l, r = lb.left[idx], lb.right[idx]
    dn = (h.n[l] - h.n[r]).astype(float)
    dm = (h.two_m[l] - h.two_m[r]) / 2.0
    values = -1j * params.omega_c * dn - 1j * params.omega_s * dm - params.kappa * (h.n[l] + h.n[r])
    desc = EnsembleDescriptor("decoupled_dicke", int(idx.size), 0, params)
    return Spectrum(values, source=dict(desc.as_dict(), sector=sector))


def sample(desc: EnsembleDescriptor) -> Spectrum:
    if desc.kind == "ginue":
        return sample_ginue(desc.size, desc.seed)
    if desc.kind == "poisson2d":
        return sample_poisson2d(desc.size, desc.seed)
    if desc.params is None:
        raise ValueError("decoupled_dicke needs model params")
    return decoupled_spectrum(desc.params)
