"""Density profiles and localization diagnostics on the ``L x L`` grid.

``grid[w - 1, v - 1]`` holds ``|psi(a_w, b_v)|^2``.  The relative coordinate
is ``r = w - v`` (peak of bound states at ``r = 0``) and the lattice centre is
``(L + 1) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from .errors import FitError, IndexRangeError, ShapeError

__all__ = [
    "DensityProfile",
    "ScalingFit",
    "density",
    "relative_cut",
    "fit_scaling_factor",
    "center_of_mass_profile",
    "gauge_matrix_diagonal",
    "gauge_transform",
    "find_maxima",
]

FIT_FLOOR = 1e-14
BOUNDARY_EXCLUDE = 2


@dataclass(frozen=True)
class DensityProfile:
    grid: np.ndarray
    total: float
    source_energy: complex = complex("nan")

    @property
    def l(self):
        return self.grid.shape[0]

    def at(self, w, v):
        return float(self.grid[w - 1, v - 1])


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares fit ``ln rho = intercept - eta * |r|``.

    For two-sided fits ``eta`` and ``intercept`` are the averages and
    ``left``/``right`` hold the one-sided fits.
    """

    eta: float
    intercept: float
    r_squared: float
    window: tuple
    n_points: int
    left: Optional["ScalingFit"] = None
    right: Optional["ScalingFit"] = None


def density(vector, l, energy=complex("nan")):
    """Density profile of a two-body state vector of length ``l**2``."""
    vector = np.asarray(vector)
    if vector.ndim != 1 or vector.size != l * l:
        raise ShapeError(f"expected a vector of length {l * l}, got shape {vector.shape}")
    grid = np.abs(vector.reshape(l, l)) ** 2
    return DensityProfile(grid, float(grid.sum()), complex(energy))


def relative_cut(profile, fixed_v):
    """``[(r, rho(fixed_v + r, fixed_v))]`` for every ``w`` in ``1..L``."""
    l = profile.l
    if not 1 <= fixed_v <= l:
        raise IndexRangeError(f"fixed_v={fixed_v} outside 1..{l}")
    column = profile.grid[:, fixed_v - 1]
    return [(w - fixed_v, float(column[w - 1])) for w in range(1, l + 1)]


def _one_side(cut, sign):
    pts = sorted((abs(r), rho) for r, rho in cut if np.sign(r) == sign)
    # the outermost sites touch the open boundary
    pts = pts[: max(len(pts) - BOUNDARY_EXCLUDE, 0)]
    pts = [(x, rho) for x, rho in pts if rho > FIT_FLOOR]
    if len(pts) < 4:
        side = "right" if sign > 0 else "left"
        raise FitError(f"only {len(pts)} usable points on the {side} side")
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.log([p[1] for p in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    r2 = min(max(r2, 0.0), 1.0)
    return ScalingFit(-float(slope), float(intercept), r2, (float(x.min()), float(x.max())), len(x))


def fit_scaling_factor(cut, side="both"):
    """Exponential decay rate of a relative cut away from ``r = 0``.

    Points at ``r = 0``, the two outermost sites of each side and values below
    ``1e-14`` are excluded.

    Parameters
    ----------
    cut : list of (int, float)
        Output of :func:`relative_cut`.
    side : {"left", "right", "both"}
        ``"left"`` fits ``r < 0``, ``"right"`` fits ``r > 0``.

    Returns
    -------
    ScalingFit
    """
    side = side.lower()
    if side == "left":
        return _one_side(cut, -1)
    if side == "right":
        return _one_side(cut, 1)
    if side != "both":
        raise ValueError(f"unknown side {side!r}")
    left, right = _one_side(cut, -1), _one_side(cut, 1)
    window = (min(left.window[0], right.window[0]), max(left.window[1], right.window[1]))
    return ScalingFit(
        0.5 * (left.eta + right.eta),
        0.5 * (left.intercept + right.intercept),
        min(left.r_squared, right.r_squared),
        window,
        left.n_points + right.n_points,
        left,
        right,
    )


def center_of_mass_profile(profile):
    """Diagonal densities ``[(t, rho(t, t))]`` for ``t = 1..L``."""
    diag = np.diag(profile.grid)
    return [(t + 1, float(diag[t])) for t in range(profile.l)]


def gauge_matrix_diagonal(beta1, beta2, l):
    """Diagonal of ``M`` with ``M[(w, v)] = exp(-beta1 v - beta2 w)``."""
    w = np.repeat(np.arange(1, l + 1), l)
    v = np.tile(np.arange(1, l + 1), l)
    return np.exp(-beta1 * v - beta2 * w)


def gauge_transform(h, beta1, beta2, l):
    """Similarity transform ``M^-1 H M`` with the diagonal skin gauge ``M``.

    For open boundaries and ``beta`` matched to the hoppings the result is
    Hermitian; the spectrum is unchanged in all cases.
    """
    h = np.asarray(h)
    if h.shape != (l * l, l * l):
        raise ShapeError(f"expected ({l * l}, {l * l}) matrix, got {h.shape}")
    m = gauge_matrix_diagonal(beta1, beta2, l)
    return h * (m[np.newaxis, :] / m[:, np.newaxis])


def find_maxima(profile, prominence=0.3, merge_radius=2.0):
    """Local maxima of a density grid.

    A site is a maximum when no site in its 8-neighbourhood is higher and its
    value exceeds ``prominence * max(rho)``.  Maxima closer than
    ``merge_radius`` to a higher one are dropped.

    Returns
    -------
    list of (w, v, rho)
        Sorted by ``rho`` descending; ``w`` and ``v`` are 1-based.
    """
    if not 0 < prominence < 1:
        raise ValueError("prominence must lie in (0, 1)")
    grid = profile.grid
    peak = grid.max()
    if peak <= 0:
        return []
    neighborhood = ndimage.maximum_filter(grid, size=3, mode="constant", cval=-np.inf)
    candidates = np.argwhere((grid >= neighborhood) & (grid > prominence * peak))
    ranked = sorted(
        ((int(a) + 1, int(b) + 1, float(grid[a, b])) for a, b in candidates),
        key=lambda item: (-item[2], item[0], item[1]),
    )
    kept = []
    for w, v, rho in ranked:
        if all(np.hypot(w - w2, v - v2) > merge_radius for w2, v2, _ in kept):
            kept.append((w, v, rho))
    return kept
