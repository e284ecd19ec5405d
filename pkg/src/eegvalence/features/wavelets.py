"""Daubechies filter construction and periodized wavelet-packet decomposition.

Everything here is plain numpy. The packet tree is computed level by level
over arrays shaped ``(..., n_nodes, n_coef)`` so that a whole multichannel
trial goes through the filter bank in one pass.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.special import comb


@lru_cache(maxsize=None)
def _daubechies_lowpass(order: int) -> tuple[float, ...]:
    # |H|^2 = cos^2N(w/2) * P(sin^2(w/2)),  P(y) = sum_k C(N-1+k, k) y^k.
    # Each root y_i of P maps to a reciprocal pair z^2 - (2 - 4 y_i) z + 1 = 0;
    # the minimum-phase factor keeps the root inside the unit circle.
    coeffs = [comb(order - 1 + k, k, exact=True) for k in range(order)]
    y_roots = np.roots(coeffs[::-1]) if order > 1 else np.array([])
    h = np.array([1.0])
    for _ in range(order):
        h = P.polymul(h, [1.0, 1.0])
    for y in y_roots:
        pair = np.roots([1.0, -(2 - 4 * y), 1.0])
        r = pair[np.argmin(np.abs(pair))]
        h = P.polymul(h, [-r, 1.0])
    h = np.real(h)
    h = h / h.sum() * np.sqrt(2)
    return tuple(h[::-1])


def daubechies_filters(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Return the orthonormal (lowpass, highpass) analysis pair of ``db<order>``.

    The lowpass filter has ``2 * order`` taps and is normalized so that
    ``sum(h) == sqrt(2)`` and ``sum(h**2) == 1``. Tap ordering follows the
    usual published tables (``db4`` starts at 0.2303778133...).
    The highpass is the quadrature mirror ``g[k] = (-1)**k h[L-1-k]``.
    """
    if order < 1:
        raise ValueError("Daubechies order must be >= 1")
    h = np.array(_daubechies_lowpass(int(order)))
    L = h.size
    g = ((-1.0) ** np.arange(L)) * h[::-1]
    return h, g


@dataclass(frozen=True)
class WaveletSpec:
    """Wavelet packet parameters: Daubechies ``order`` to depth ``level``."""

    family: str = "db"
    order: int = 4
    level: int = 8
    boundary: str = "periodic"

    def __post_init__(self):
        if self.family != "db":
            raise ValueError(f"unsupported wavelet family {self.family!r}")
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if self.level < 1:
            raise ValueError("level must be >= 1")
        if self.boundary not in ("periodic", "symmetric"):
            raise ValueError(f"unknown boundary mode {self.boundary!r}")

    @property
    def n_leaves(self) -> int:
        return 2 ** self.level

    @property
    def filter_length(self) -> int:
        return 2 * self.order

    def filters(self):
        return daubechies_filters(self.order)


def gray_code(k):
    return k ^ (k >> 1)


def inverse_gray_code(g):
    g = np.asarray(g)
    out = g.copy()
    shift = g >> 1
    while np.any(shift):
        out ^= shift
        shift >>= 1
    return out


def frequency_to_natural(level: int) -> np.ndarray:
    """Natural tree index of the node at each frequency position."""
    k = np.arange(2 ** level)
    return gray_code(k)


@dataclass
class LeafSpectrum:
    """Packet leaves in ascending frequency order.

    ``leaves`` has shape ``(..., n_leaves, n_coef)``; rows that were not
    requested (see :func:`wpd_decompose`) are NaN.
    """

    leaves: np.ndarray
    leaf_band_hz: np.ndarray
    sample_rate_hz: float
    computed: np.ndarray = field(default=None)

    @property
    def n_leaves(self) -> int:
        return self.leaf_band_hz.shape[0]

    def energies(self) -> np.ndarray:
        return np.sum(self.leaves ** 2, axis=-1)


def leaf_intervals(spec: WaveletSpec, sample_rate_hz: float) -> np.ndarray:
    width = sample_rate_hz / 2 ** (spec.level + 1)
    lo = np.arange(spec.n_leaves) * width
    return np.stack([lo, lo + width], axis=1)


def _extend(x, spec: WaveletSpec):
    n = x.shape[-1]
    block = 2 ** spec.level
    target = -(-n // block) * block
    if target == n:
        return x
    pad = target - n
    if spec.boundary == "periodic":
        # zero padding keeps the periodized transform orthogonal on the
        # original samples, so energy is conserved exactly
        widths = [(0, 0)] * (x.ndim - 1) + [(0, pad)]
        return np.pad(x, widths)
    widths = [(0, 0)] * (x.ndim - 1) + [(0, pad)]
    return np.pad(x, widths, mode="symmetric")


def _split(nodes, h, g):
    # nodes: (..., m, n) with n even -> (..., m, 2, n/2) [approx, detail]
    n = nodes.shape[-1]
    L = h.size
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(L)[None, :]) % n
    taps = nodes[..., idx]  # (..., m, n/2, L)
    a = taps @ h
    d = taps @ g
    return np.stack([a, d], axis=-2)


def wpd_decompose(signal, spec: WaveletSpec | None = None, sample_rate_hz: float = 1.0,
                  leaves=None) -> LeafSpectrum:
    """Full wavelet-packet tree of ``signal`` down to ``spec.level``.

    Parameters
    ----------
    signal : array_like, shape (..., n_samples)
        Leading axes (channels, trials) are decomposed independently.
    spec : WaveletSpec
        Defaults to db4, level 8, periodic extension.
    sample_rate_hz : float
        Only used to label the leaf frequency intervals.
    leaves : iterable of int, optional
        Frequency-ordered leaf indices to compute. Subtrees that cannot
        reach any of them are skipped; the other rows come back as NaN.

    Returns
    -------
    LeafSpectrum
        Leaves re-ordered from natural (tree) order into frequency order.
    """
    spec = spec or WaveletSpec()
    x = np.asarray(signal, dtype=float)
    n = x.shape[-1]
    if n < spec.n_leaves:
        raise ValueError(
            f"signal too short for level {spec.level}: {n} samples < {spec.n_leaves}")
    if n < spec.filter_length * spec.n_leaves:
        warnings.warn(
            f"{n} samples at level {spec.level}: every leaf is affected by boundary wrap",
            RuntimeWarning, stacklevel=2)
    x = _extend(x, spec)
    h, g = spec.filters()
    level = spec.level

    if leaves is None:
        wanted = np.ones(spec.n_leaves, bool)
    else:
        wanted = np.zeros(spec.n_leaves, bool)
        wanted[np.asarray(list(leaves), int)] = True

    nodes = x[..., None, :]
    natural = np.array([0])
    for j in range(level):
        children = _split(nodes, h, g)
        shape = children.shape
        nodes = children.reshape(shape[:-3] + (shape[-3] * 2, shape[-1]))
        natural = (2 * natural[:, None] + np.arange(2)[None, :]).ravel()
        # frequency span of each node, in units of final leaves
        pos = inverse_gray_code(natural)
        span = 2 ** (level - j - 1)
        keep = np.array([wanted[p * span:(p + 1) * span].any() for p in pos])
        if not keep.all():
            nodes = nodes[..., keep, :]
            natural = natural[keep]

    pos = inverse_gray_code(natural)
    out = np.full(x.shape[:-1] + (spec.n_leaves, nodes.shape[-1]), np.nan)
    out[..., pos, :] = nodes
    computed = np.zeros(spec.n_leaves, bool)
    computed[pos] = True
    return LeafSpectrum(out, leaf_intervals(spec, sample_rate_hz), float(sample_rate_hz), computed)
