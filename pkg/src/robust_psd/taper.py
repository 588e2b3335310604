"""Data tapers, segment planning, and equivalent degrees of freedom.

The equivalent degrees of freedom (EDOF) of an average of K overlapped
tapered periodograms is

    nu = 2K / (1 + 2 * sum_{m=1}^{K-1} (1 - m/K) * c_m)

where c_m derives from the lag correlation of the energy-normalized taper at
shift m * (segment hop). ``mode='squared'`` uses the magnitude-squared
correlation (the standard form); ``mode='paper_literal'`` uses the unsquared
magnitude.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import windows as _windows

TAPER_KINDS = ("rectangular", "hann", "triangular", "parzen")
EDOF_MODES = ("squared", "paper_literal")


@dataclass(frozen=True)
class Taper:
    """Taper coefficients plus a flag recording energy normalization."""

    kind: str
    coefficients: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        if self.kind not in TAPER_KINDS:
            raise ValueError(f"unknown taper kind {self.kind!r}")
        coeff = np.asarray(self.coefficients, dtype=np.float64)
        if coeff.ndim != 1 or coeff.size < 2:
            raise ValueError("taper needs at least 2 coefficients")
        if not np.all(np.isfinite(coeff)):
            raise ValueError("taper coefficients must be finite")
        if np.any(coeff < 0.0):
            raise ValueError("taper coefficients must be non-negative")
        coeff = coeff.copy()
        coeff.flags.writeable = False
        object.__setattr__(self, "coefficients", coeff)

    def __len__(self) -> int:
        return self.coefficients.size


def make_taper(kind: str, n: int) -> Taper:
    """Build an unnormalized length-n taper of the given kind.

    The Hann taper is sin^2(pi*t/n) for t = 0..n-1 (periodic convention,
    coefficient sum exactly n/2); rectangular is all ones; triangular and
    parzen use their standard symmetric definitions.
    """
    n = int(n)
    if n < 2:
        raise ValueError(f"taper length must be >= 2, got {n}")
    if kind == "rectangular":
        coeff = np.ones(n)
    elif kind == "hann":
        t = np.arange(n, dtype=np.float64)
        coeff = np.sin(np.pi * t / n) ** 2
    elif kind == "triangular":
        coeff = _windows.triang(n, sym=True)
    elif kind == "parzen":
        coeff = _windows.parzen(n, sym=True)
    else:
        raise ValueError(f"unknown taper kind {kind!r}")
    return Taper(kind=kind, coefficients=coeff, normalized=False)


def normalize_energy(taper: Taper) -> Taper:
    """Scale coefficients so that sum(h_t^2) == 1; no-op if already done."""
    if taper.normalized:
        return taper
    energy = float(np.dot(taper.coefficients, taper.coefficients))
    if energy <= 0.0:
        raise ValueError("taper has zero energy")
    return Taper(
        kind=taper.kind,
        coefficients=taper.coefficients / np.sqrt(energy),
        normalized=True,
    )


def edof(taper: Taper, k: int, n_overlap: int, mode: str = "squared") -> float:
    """Equivalent degrees of freedom of K overlapped tapered periodograms.

    Requires an energy-normalized taper. The lag sum at shift m*(n - n_overlap)
    runs over indices where both factors exist (no periodic wrap), so shifts at
    or beyond the taper length contribute nothing. Always satisfies
    0 < nu <= 2K, with nu == 2K exactly when segments do not overlap.
    """
    if not taper.normalized:
        raise ValueError("edof requires an energy-normalized taper")
    if mode not in EDOF_MODES:
        raise ValueError(f"unknown edof mode {mode!r}")
    k = int(k)
    if k < 1:
        raise ValueError(f"segment count must be >= 1, got {k}")
    n = len(taper)
    n_overlap = int(n_overlap)
    if not 0 <= n_overlap < n:
        raise ValueError(f"overlap must be in [0, {n - 1}], got {n_overlap}")
    hop = n - n_overlap
    h = taper.coefficients
    corr_sum = 0.0
    for m in range(1, k):
        shift = m * hop
        if shift >= n:
            break
        inner = float(np.dot(h[: n - shift], h[shift:]))
        c = inner * inner if mode == "squared" else abs(inner)
        corr_sum += (1.0 - m / k) * c
    return 2.0 * k / (1.0 + 2.0 * corr_sum)


@dataclass(frozen=True)
class SegmentPlan:
    """Segmentation of a signal into k segments of n_seg with n_overlap shared."""

    n_seg: int
    n_overlap: int
    k: int

    def __post_init__(self):
        if self.n_seg < 2:
            raise ValueError(f"segment length must be >= 2, got {self.n_seg}")
        if not 0 <= self.n_overlap < self.n_seg:
            raise ValueError(
                f"overlap must be in [0, {self.n_seg - 1}], got {self.n_overlap}"
            )
        if self.k < 1:
            raise ValueError(f"segment count must be >= 1, got {self.k}")

    @property
    def hop(self) -> int:
        return self.n_seg - self.n_overlap

    @property
    def span(self) -> int:
        """Number of samples consumed by the k segments."""
        return (self.k - 1) * self.hop + self.n_seg


def plan_segments(signal_len: int, n_seg: int, overlap_fraction: float) -> SegmentPlan:
    """Plan as many full segments as fit; trailing samples are dropped.

    n_overlap = round(overlap_fraction * n_seg) (half away from zero), and
    k = floor((signal_len - n_seg) / hop) + 1.
    """
    signal_len = int(signal_len)
    n_seg = int(n_seg)
    if n_seg < 2:
        raise ValueError(f"segment length must be >= 2, got {n_seg}")
    overlap_fraction = float(overlap_fraction)
    if not 0.0 <= overlap_fraction < 1.0:
        raise ValueError(
            f"overlap fraction must be in [0, 1), got {overlap_fraction!r}"
        )
    if signal_len < n_seg:
        raise ValueError(
            f"signal of {signal_len} samples is shorter than one segment ({n_seg})"
        )
    n_overlap = int(np.floor(overlap_fraction * n_seg + 0.5))
    if n_overlap >= n_seg:
        n_overlap = n_seg - 1
    hop = n_seg - n_overlap
    k = (signal_len - n_seg) // hop + 1
    return SegmentPlan(n_seg=n_seg, n_overlap=n_overlap, k=int(k))
