"""Two-photon extension: effective SSH Bloch model and corner modes.

In the strong-coupling limit the bound pairs live on the grid diagonal and
the pair tunneling ``p`` dimerises that line into an SSH chain.  The Bloch
matrix is

    H(k) = (U + J_T/2) I + d_x(k) sigma_x + d_y(k) sigma_y

with ``d_x = l1 + (l1 + P) cos k - i l2 sin k``,
``d_y = -i l2 + (P + l1) sin k + i l2 cos k``, ``l1 = (j1 + j2)/4``,
``l2 = (j1 - j2)/4`` and ``J_T = j1 + j2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegenerateLoopError, GaplessError, SamplingError
from .spectra import SpectralLoop, classify_states, winding_number

__all__ = [
    "SshBloch",
    "CornerModeReport",
    "bloch_vector",
    "effective_ssh_bloch",
    "bloch_bands",
    "ssh_winding",
    "gap_scan",
    "bloch_band_loops",
    "bloch_spectral_windings",
    "detect_corner_modes",
]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)


@dataclass(frozen=True)
class SshBloch:
    lambda1: complex
    lambda2: complex
    p: complex
    u: float
    k: float

    @classmethod
    def from_params(cls, params, k):
        return cls(params.lambda1, params.lambda2, complex(params.p), params.u, float(k))

    @property
    def j_total(self):
        return 4 * self.lambda1

    def coefficients(self):
        l1, l2, p, k = self.lambda1, self.lambda2, self.p, self.k
        dx = l1 + (l1 + p) * np.cos(k) - 1j * l2 * np.sin(k)
        dy = -1j * l2 + (p + l1) * np.sin(k) + 1j * l2 * np.cos(k)
        return dx, dy

    def matrix(self):
        dx, dy = self.coefficients()
        return (self.u + self.j_total / 2) * np.eye(2) + dx * PAULI_X + dy * PAULI_Y


def bloch_vector(params, k):
    """``(d_x(k), d_y(k))``; vectorises over ``k``."""
    k = np.asarray(k, dtype=float)
    l1, l2, p = params.lambda1, params.lambda2, complex(params.p)
    dx = l1 + (l1 + p) * np.cos(k) - 1j * l2 * np.sin(k)
    dy = -1j * l2 + (p + l1) * np.sin(k) + 1j * l2 * np.cos(k)
    return dx, dy


def effective_ssh_bloch(params, k):
    """2x2 Bloch Hamiltonian of the diagonal bound-pair chain at momentum ``k``."""
    return SshBloch.from_params(params, k).matrix()


def bloch_bands(params, k):
    """Band energies ``E_-(k), E_+(k)`` (principal square root); vectorised."""
    dx, dy = bloch_vector(params, k)
    s = np.sqrt(dx * dx + dy * dy + 0j)
    centre = params.u + (complex(params.j1) + complex(params.j2)) / 2
    return centre - s, centre + s


def _band_gap(params, k):
    dx, dy = bloch_vector(params, k)
    return 2 * np.abs(np.sqrt(dx * dx + dy * dy + 0j))


def ssh_winding(params, n_k=256, gap_tol=1e-6):
    """Winding number of the off-diagonal Bloch elements.

    ``nu_+`` and ``nu_-`` are the phase windings of ``d_x + i d_y`` and
    ``d_x - i d_y`` as ``k`` runs over the Brillouin zone; the result is
    ``(nu_- - nu_+) / 2``.  For Hermitian parameters ``nu_- = -nu_+`` and this
    is the usual integer SSH winding (sign follows the orientation
    ``d_y dd_x - d_x dd_y``).  Non-Hermitian parameters may give half-integers,
    returned as float.

    Raises
    ------
    GaplessError
        If the two bands touch, ``min_k |E_+ - E_-| <= gap_tol``.
    """
    min_gap = _min_gap(params, max(n_k, 1024))
    if min_gap <= gap_tol:
        raise GaplessError(f"bands touch (min gap {min_gap:.2e}); winding undefined")

    def plus(k):
        dx, dy = bloch_vector(params, k)
        return dx + 1j * dy

    def minus(k):
        dx, dy = bloch_vector(params, k)
        return dx - 1j * dy

    nu_plus = winding_number(SpectralLoop(plus, n_k), base=0)
    nu_minus = winding_number(SpectralLoop(minus, n_k), base=0)
    diff = nu_minus - nu_plus
    return diff // 2 if diff % 2 == 0 else diff / 2


def _min_gap(params, n_k):
    ks = -np.pi + 2 * np.pi * np.arange(n_k) / n_k
    gaps = _band_gap(params, ks)
    best = float(gaps.min())
    step = 2 * np.pi / n_k
    for i in np.argsort(gaps)[:3]:
        res = minimize_scalar(
            lambda k: float(_band_gap(params, k)),
            bounds=(ks[i] - step, ks[i] + step),
            method="bounded",
            options={"xatol": 1e-12},
        )
        best = min(best, float(res.fun))
    return best


def gap_scan(params_base, p_values, n_k=1024):
    """``[(p, min_k |E_+(k) - E_-(k)|)]`` over a list of pair amplitudes."""
    return [(p, _min_gap(params_base.with_(p=p), n_k)) for p in p_values]


def bloch_band_loops(params, n_k=4096):
    """Closed complex-energy loops traced by the two Bloch bands.

    The square root is continued along ``k``.  If the bands exchange after one
    Brillouin zone they form a single loop over ``4 pi``; otherwise each band
    is its own loop.
    """
    ks = -np.pi + 2 * np.pi * np.arange(n_k) / n_k
    dx, dy = bloch_vector(params, ks)
    s = np.sqrt(dx * dx + dy * dy + 0j)
    for i in range(1, n_k):
        if abs(s[i] - s[i - 1]) > abs(-s[i] - s[i - 1]):
            s[i] = -s[i]
    centre = params.u + (complex(params.j1) + complex(params.j2)) / 2
    # continuing one more step from k = pi - dk lands on +-s[0]
    dx_end, dy_end = bloch_vector(params, np.pi)
    s_next = np.sqrt(dx_end * dx_end + dy_end * dy_end + 0j)
    if abs(s_next - s[-1]) > abs(-s_next - s[-1]):
        s_next = -s_next
    swapped = abs(s_next - s[0]) > abs(s_next + s[0])
    if swapped:
        return [SpectralLoop.from_samples(np.concatenate([centre + s, centre - s]))]
    return [SpectralLoop.from_samples(centre + s), SpectralLoop.from_samples(centre - s)]


def bloch_spectral_windings(params, n_k=4096):
    """Spectral winding of each Bloch band loop around its own centroid.

    Loops that collapse onto a curve without interior (e.g. Hermitian bands)
    report 0.
    """
    out = []
    for loop in bloch_band_loops(params, n_k):
        samples = loop.samples
        centre = samples.mean()
        spread = np.ptp(samples.imag)
        if spread < 1e-12 * max(1.0, np.abs(samples).max()):
            out.append(0)
            continue
        try:
            out.append(winding_number(loop, base=centre))
        except (DegenerateLoopError, SamplingError):
            out.append(0)
    return out


@dataclass(frozen=True)
class CornerModeReport:
    """In-gap states of the bound band and their corner weights.

    ``corner_weights[i]`` is ``(w_first, w_last)``: the density on the
    ``block x block`` corners at ``(1, 1)`` and ``(L, L)``.  ``vectors`` hold
    the (possibly corner-localised, see :func:`detect_corner_modes`) states.
    """

    in_gap_indices: list
    energies: np.ndarray
    corner_weights: np.ndarray
    gap_bounds: tuple
    vectors: np.ndarray
    predicted_gap: tuple

    def __len__(self):
        return len(self.in_gap_indices)

    def dominant_corners(self, threshold=0.5):
        """``"first"``, ``"last"`` or ``None`` per state."""
        out = []
        for first, last in self.corner_weights:
            if first >= threshold and first >= last:
                out.append("first")
            elif last >= threshold:
                out.append("last")
            else:
                out.append(None)
        return out


def _corner_weights(vec, l, block):
    rho = np.abs(vec.reshape(l, l)) ** 2
    rho = rho / rho.sum()
    return float(rho[:block, :block].sum()), float(rho[-block:, -block:].sum())


def _localise(vectors, l, block):
    # within an exactly degenerate eigenspace every combination is an
    # eigenvector; pick the one diagonalising the (1, 1) corner weight
    q, _ = np.linalg.qr(vectors)
    mask = np.zeros((l, l))
    mask[:block, :block] = 1.0
    proj = q.conj().T @ (mask.ravel()[:, None] * q)
    _, rot = np.linalg.eigh(proj)
    return q @ rot


def predicted_gap(params, n_k=1024):
    """Gap between the two Bloch bands, ``(max Re E_-, min Re E_+)``."""
    ks = -np.pi + 2 * np.pi * np.arange(n_k) / n_k
    lo, hi = bloch_bands(params, ks)
    return float(np.max(lo.real)), float(np.min(hi.real))


def detect_corner_modes(sol, params, block=3, shrink=0.05, second_gap_ratio=0.25,
                        degeneracy_tol=1e-8, max_in_gap=4):
    """Find in-gap bound states of the extended model and their corner weights.

    The bound band (``L`` states around ``U``, see
    :func:`skinlat.spectra.classify_states`) is sorted by real part.  Its two
    largest spacings bracket the in-gap states when both are large (the
    second at least ``second_gap_ratio`` times the first); in the trivial
    phase only one large spacing exists and the report is empty; so is a
    bracket holding more than ``max_in_gap`` states (a band, not edge modes).  The gap
    interval is shrunk by ``shrink`` of its width on each side.  Clusters of
    in-gap states degenerate within ``degeneracy_tol`` are rotated to the
    corner-localised basis.
    """
    l = params.l
    part = classify_states(sol, params)
    bound = part.bound
    energies = sol.values[bound]
    order = np.argsort(energies.real, kind="stable")
    bound = bound[order]
    re = sol.values[bound].real
    pred = predicted_gap(params)
    empty = CornerModeReport([], np.array([], dtype=complex), np.zeros((0, 2)), (np.nan, np.nan),
                             np.zeros((l * l, 0), dtype=complex), pred)
    if len(re) < 4:
        return empty
    gaps = np.diff(re)
    first, second = np.argsort(gaps)[::-1][:2]
    lo_i, hi_i = sorted((first, second))
    median = np.median(gaps)
    if gaps[second] < second_gap_ratio * gaps[first] or gaps[second] <= 3 * median:
        top, bottom = re[first], re[first + 1]
        return CornerModeReport([], empty.energies, empty.corner_weights, (top, bottom),
                                empty.vectors, pred)
    lower_top, upper_bottom = re[lo_i], re[hi_i + 1]
    width = upper_bottom - lower_top
    window = (lower_top + shrink * width, upper_bottom - shrink * width)
    idx = [int(i) for i in bound[lo_i + 1: hi_i + 1]
           if window[0] < sol.values[i].real < window[1]]
    if not idx or hi_i - lo_i > max_in_gap:
        return CornerModeReport([], empty.energies, empty.corner_weights,
                                (lower_top, upper_bottom), empty.vectors, pred)
    vals = sol.values[idx]
    vecs = sol.right_vectors[:, idx].copy()
    scale = max(1.0, float(np.abs(vals).max()))
    start = 0
    for stop in range(1, len(idx) + 1):
        if stop == len(idx) or abs(vals[stop] - vals[start]) > degeneracy_tol * scale:
            if stop - start > 1:
                vecs[:, start:stop] = _localise(vecs[:, start:stop], l, block)
            start = stop
    weights = np.array([_corner_weights(vecs[:, j], l, block) for j in range(len(idx))])
    return CornerModeReport(idx, vals, weights, (lower_top, upper_bottom), vecs, pred)

