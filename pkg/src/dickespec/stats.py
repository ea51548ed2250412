"""Spacing statistics of complex spectra.

Nearest-neighbour (NN) and next-nearest-neighbour (NNN) searches work on
the canonical ordering of the eigenvalues (ascending real part, then
imaginary part). Results are returned aligned with that ordering. When two
candidates are equidistant within a relative ``1e-13`` the one with the
smaller canonical index wins, so outputs do not depend on input order.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .eig import Spectrum, canonical_order

log = logging.getLogger(__name__)

TIE_RTOL = 1e-13
DEGENERACY_RTOL = 1e-10
DEFAULT_BANDWIDTH_FACTOR = 4.5
DEFAULT_S_MAX = 5.0
DEFAULT_BINS = 100
GINUE_ORDER = 200

_CHUNK_ELEMENTS = 2_000_000


class DegeneracyWarning(UserWarning):
    """Spectrum contains (numerically) coincident eigenvalues."""


def _values(spec) -> np.ndarray:
    if isinstance(spec, Spectrum):
        return spec.eigenvalues
    return canonical_order(np.asarray(spec, dtype=complex).ravel())


def _neighbours(values: np.ndarray, count: int) -> np.ndarray:
    """Indices of the ``count`` closest other points, nearest first.

    Plain O(N^2) distance scan in row chunks.
    """
    n = values.size
    out = np.empty((n, count), dtype=np.intp)
    step = max(1, _CHUNK_ELEMENTS // max(n, 1))
    for start in range(0, n, step):
        stop = min(n, start + step)
        rows = np.arange(stop - start)
        dist = np.abs(values[start:stop, None] - values[None, :])
        dist[rows, rows + start] = np.inf
        for k in range(count):
            dmin = dist.min(axis=1)
            within = dist <= dmin[:, None] * (1.0 + TIE_RTOL)
            pick = within.argmax(axis=1)
            out[start:stop, k] = pick
            dist[rows, pick] = np.inf
    return out


def nn_spacings(spec) -> np.ndarray:
    """Distance from each eigenvalue to its nearest neighbour."""
    values = _values(spec)
    if values.size < 2:
        raise ValueError("need at least 2 eigenvalues for spacings")
    nn = _neighbours(values, 1)[:, 0]
    return np.abs(values[nn] - values)


def count_degenerate(spacings: np.ndarray, values: np.ndarray, rtol: float = DEGENERACY_RTOL) -> int:
    """Number of eigenvalues whose NN spacing is zero to ``rtol`` of the spectral scale."""
    if values.size == 0:
        return 0
    scale = max(1.0, float(np.max(np.abs(values))))
    return int(np.count_nonzero(spacings <= rtol * scale))


def kde_density(spec, E, sigma: float):
    """Gaussian kernel estimate of the mean spectral density at ``E``.

    ``rho(E) = sum_i exp(-|E - E_i|^2 / (2 sigma^2)) / (2 pi sigma^2 N)``
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    values = _values(spec)
    points = np.atleast_1d(np.asarray(E, dtype=complex))
    out = np.empty(points.size)
    step = max(1, _CHUNK_ELEMENTS // max(values.size, 1))
    for start in range(0, points.size, step):
        block = points[start:start + step]
        d2 = np.abs(block[:, None] - values[None, :]) ** 2
        out[start:start + step] = np.exp(-d2 / (2 * sigma**2)).sum(axis=1)
    out /= 2 * np.pi * sigma**2 * values.size
    return out if np.ndim(E) else float(out[0])


@dataclass(frozen=True)
class UnfoldedSpacings:
    """Raw and unfolded NN spacings, aligned with the canonical ordering.

    ``unfolded = raw * sqrt(density) / normalizer`` has unit mean.
    """

    raw: np.ndarray
    unfolded: np.ndarray
    density: np.ndarray
    sigma: float
    global_mean_raw: float
    normalizer: float
    degenerate: int = 0


def _keep_mask(keep, size: int):
    if keep is None:
        return None
    keep = np.asarray(keep, dtype=bool)
    if keep.shape != (size,):
        raise ValueError(f"keep mask has shape {keep.shape}, expected ({size},)")
    if not keep.any():
        raise ValueError("keep mask selects no eigenvalues")
    return keep


def unfold(
    spec,
    bandwidth_factor: float = DEFAULT_BANDWIDTH_FACTOR,
    sigma: float | None = None,
    keep=None,
) -> UnfoldedSpacings:
    """Unfold NN spacings with a Gaussian-kernel density estimate.

    The kernel width is ``bandwidth_factor`` times the mean raw spacing
    unless ``sigma`` is given explicitly.

    ``keep`` is an optional boolean mask aligned with the canonical order.
    Neighbours and the density estimate still use every eigenvalue, but
    only the kept spacings are returned and normalized. This avoids the
    artificial edge that cutting the spectrum first would create.
    """
    values = _values(spec)
    keep = _keep_mask(keep, values.size)
    raw = nn_spacings(values)
    mean_raw = float(raw.mean())
    if mean_raw == 0.0:
        raise ValueError("all eigenvalues are degenerate; cannot unfold")
    width = bandwidth_factor * mean_raw if sigma is None else float(sigma)
    if keep is None:
        rho = kde_density(values, values, width)
    else:
        raw = raw[keep]
        rho = kde_density(values, values[keep], width)
    degenerate = count_degenerate(raw, values)
    if degenerate:
        warnings.warn(
            f"{degenerate} of {raw.size} eigenvalues are degenerate; "
            "spacing statistics will be non-universal",
            DegeneracyWarning,
            stacklevel=2,
        )
    u = raw * np.sqrt(rho)
    normalizer = float(u.mean())
    if normalizer == 0.0:
        raise ValueError("all selected eigenvalues are degenerate; cannot unfold")
    return UnfoldedSpacings(
        raw=raw,
        unfolded=u / normalizer,
        density=rho,
        sigma=width,
        global_mean_raw=mean_raw,
        normalizer=normalizer,
        degenerate=degenerate,
    )


def pdf_2d_poisson(s):
    """NN spacing density of uncorrelated points in the plane at unit mean."""
    s = np.asarray(s, dtype=float)
    return np.pi / 2 * s * np.exp(-np.pi * s**2 / 4)


def _pbar_ginue(s, order: int = GINUE_ORDER):
    """GinUE NN spacing density for the unscaled process (before mean fixing).

    Uses ``Gamma(1+k, x) / k! = Q(k+1, x)`` (regularized upper incomplete
    gamma) and sums in log space:

        pbar(s) = sum_j 2 s^(2j+1) e^(-x) / (j! Q(j+1, x)) * prod_k Q(k+1, x)

    with ``x = s^2``. Both the series and the product run over ``1..order``.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.zeros_like(s)
    # Q(2, x) ~ x e^-x underflows beyond this; the density there is ~e^-600
    live = (s > 0) & (s * s < 600.0)
    if not np.any(live):
        return out
    x = s[live] ** 2
    k = np.arange(1, order + 1)
    log_q = np.log(special.gammaincc(k[None, :] + 1, x[:, None]))
    log_prod = log_q.sum(axis=1)
    log_terms = (
        np.log(2.0)
        + (2 * k[None, :] + 1) * np.log(s[live])[:, None]
        - x[:, None]
        - special.gammaln(k + 1)[None, :]
        - log_q
        + log_prod[:, None]
    )
    out[live] = np.exp(log_terms).sum(axis=1)
    return out


@lru_cache(maxsize=8)
def ginue_mean_spacing(order: int = GINUE_ORDER) -> float:
    """Mean of the unscaled GinUE spacing density, cached per truncation."""
    value, _ = integrate.quad(
        lambda s: s * _pbar_ginue(s, order)[0], 0.0, 6.0, epsabs=1e-12, epsrel=1e-10, limit=200
    )
    return value


def pdf_ginue(s, order: int = GINUE_ORDER):
    """GinUE NN spacing density rescaled to unit mean spacing."""
    sbar = ginue_mean_spacing(order)
    scalar = np.ndim(s) == 0
    out = sbar * _pbar_ginue(sbar * np.asarray(s, dtype=float), order)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class HistogramDensity:
    bin_edges: np.ndarray
    density: np.ndarray
    sample_count: int
    overflow: int = 0

    @property
    def width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def overflow_fraction(self) -> float:
        return self.overflow / self.sample_count if self.sample_count else 0.0

    @classmethod
    def from_function(cls, func, s_max: float = DEFAULT_S_MAX, bins: int = DEFAULT_BINS) -> "HistogramDensity":
        """Analytic density sampled at the bin midpoints of the standard grid."""
        edges = np.linspace(0.0, s_max, bins + 1)
        mids = 0.5 * (edges[:-1] + edges[1:])
        return cls(bin_edges=edges, density=np.asarray(func(mids), dtype=float), sample_count=0)


def spacing_histogram(unfolded, s_max: float = DEFAULT_S_MAX, bins: int = DEFAULT_BINS) -> HistogramDensity:
    """Probability-density histogram on a uniform grid over ``[0, s_max]``.

    Normalized by the total sample count, so spacings beyond ``s_max``
    (tallied in ``overflow``) carry the missing mass.
    """
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    if s_max <= 0:
        raise ValueError(f"s_max must be > 0, got {s_max}")
    s = unfolded.unfolded if isinstance(unfolded, UnfoldedSpacings) else np.asarray(unfolded, dtype=float)
    s = np.ravel(s)
    edges = np.linspace(0.0, s_max, bins + 1)
    counts, _ = np.histogram(s, bins=edges)
    overflow = int(np.count_nonzero(s > s_max))
    n = s.size
    width = edges[1] - edges[0]
    density = counts / (n * width) if n else np.zeros(bins)
    return HistogramDensity(bin_edges=edges, density=density, sample_count=n, overflow=overflow)


def eta_metric(p: HistogramDensity) -> float:
    """Squared distance of ``p`` from 2D Poisson relative to GinUE's distance.

    0 for 2D Poisson, 1 for GinUE. Both integrals use the midpoint rule on
    the histogram grid.
    """
    mids = p.midpoints
    ref_poisson = pdf_2d_poisson(mids)
    ref_ginue = pdf_ginue(mids)
    num = np.sum((p.density - ref_poisson) ** 2) * p.width
    den = np.sum((ref_ginue - ref_poisson) ** 2) * p.width
    return float(num / den)


@dataclass(frozen=True)
class RatioSamples:
    """Complex spacing ratios ``z = (E_NN - E) / (E_NNN - E)`` per eigenvalue."""

    z: np.ndarray

    @property
    def r(self) -> np.ndarray:
        return np.abs(self.z)

    @property
    def theta(self) -> np.ndarray:
        th = np.angle(self.z)
        return np.where(th <= -np.pi, np.pi, th)

    def __len__(self) -> int:
        return self.z.size


def spacing_ratios(spec, keep=None) -> RatioSamples:
    """Ratios for every eigenvalue, or for the ``keep`` subset (see :func:`unfold`)."""
    values = _values(spec)
    if values.size < 3:
        raise ValueError("need at least 3 eigenvalues for spacing ratios")
    nbr = _neighbours(values, 2)
    keep = _keep_mask(keep, values.size)
    centre = values
    if keep is not None:
        nbr, centre = nbr[keep], values[keep]
    num = values[nbr[:, 0]] - centre
    den = values[nbr[:, 1]] - centre
    # NN and NNN both coincide with E_i (threefold degeneracy): z := 0
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.where(den != 0, num / np.where(den != 0, den, 1), 0)
    return RatioSamples(z)


def ratio_summary(samples) -> tuple[float, float]:
    """Means of ``r`` and ``cos(theta)``."""
    z = samples.z if isinstance(samples, RatioSamples) else np.atleast_1d(np.asarray(samples, dtype=complex))
    if z.size == 0:
        raise ValueError("no ratio samples")
    r = np.abs(z)
    # cos(arg z) = Re z / |z|; a zero ratio (degenerate NN) has no angle
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_t = np.where(r > 0, z.real / r, 1.0)
    return float(r.mean()), float(cos_t.mean())
