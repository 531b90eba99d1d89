"""Momentum-space spectra, winding numbers and the two-body bound-state branch.

Conventions
-----------
* Free dispersion of one particle: ``E[q] = -j1 exp(iq) - j2 exp(-iq)``,
  which equals ``-J0 (exp(iq + beta) + exp(-iq - beta))``.
* ``K = qa + qb`` and ``k = (qa - qb) / 2``.  A loop over ``k`` at fixed
  ``K`` closes after ``2 pi``; a loop over ``K`` at fixed ``k`` only closes
  after ``4 pi`` and is parameterised by ``t = K / 2``.
* Windings are counted positive for counter-clockwise loops, with the loop
  parameter increasing.
* The relative-chain Green function solves ``(H0 - E) g = delta`` and behaves
  as ``-1/E`` for large ``|E|``.  Bound states are the poles
  ``1 + U g(K; 0, 0; E) = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    ClassificationError,
    DegenerateLoopError,
    NearSingularError,
    ParameterError,
    SamplingError,
)
from .model import hopping_coefficients

__all__ = [
    "SpectralLoop",
    "BoundStateBranch",
    "StatePartition",
    "free_dispersion",
    "single_particle_dispersion",
    "relative_k_loop",
    "center_of_mass_loop",
    "winding_number",
    "green_function_diag",
    "ring_green_function_diag",
    "bound_state_branch",
    "classify_states",
]

MIN_SAMPLES = 16
ROOT_TOL = 1e-10
ROOT_MAXITER = 100


def single_particle_dispersion(j1, j2, q):
    """``-j1 exp(iq) - j2 exp(-iq)`` for one particle with forward/backward hoppings."""
    q = np.asarray(q, dtype=float)
    return -complex(j1) * np.exp(1j * q) - complex(j2) * np.exp(-1j * q)


def free_dispersion(params, qa, qb):
    """Non-interacting two-body energy ``E[qa] + E[qb]``.

    Particle ``a`` carries ``beta2`` and particle ``b`` carries ``beta1``.
    Vectorises over ``qa`` and ``qb``.
    """
    j0a, j0b = params.j0a.real, params.j0b.real
    b1, b2 = params.beta1, params.beta2  # raises for zero / non-positive hoppings
    qa = np.asarray(qa, dtype=float) * params.d
    qb = np.asarray(qb, dtype=float) * params.d
    ea = -j0a * (np.exp(1j * qa + b2) + np.exp(-1j * qa - b2))
    eb = -j0b * (np.exp(1j * qb + b1) + np.exp(-1j * qb - b1))
    return ea + eb


@dataclass
class SpectralLoop:
    """Closed curve of complex energies ``E(t)``, ``t`` in ``[-pi, pi)``.

    Either ``func`` is given (and the loop can be refined on demand) or only
    fixed ``samples`` are.
    """

    func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    n_samples: int = 256
    fixed_samples: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.func is None and self.fixed_samples is None:
            raise ParameterError("SpectralLoop needs func or samples")
        if self.fixed_samples is not None:
            self.fixed_samples = np.asarray(self.fixed_samples, dtype=complex)
            self.n_samples = len(self.fixed_samples)
        if self.n_samples < MIN_SAMPLES:
            raise ParameterError(f"a loop needs at least {MIN_SAMPLES} samples")

    @classmethod
    def from_samples(cls, samples):
        return cls(func=None, fixed_samples=samples)

    @property
    def parameters(self):
        return -np.pi + 2 * np.pi * np.arange(self.n_samples) / self.n_samples

    @property
    def samples(self):
        if self.fixed_samples is not None:
            return self.fixed_samples
        return np.asarray(self.func(self.parameters), dtype=complex)

    @property
    def refinable(self):
        return self.func is not None

    def refined(self):
        if not self.refinable:
            raise SamplingError("fixed-sample loop cannot be refined")
        return SpectralLoop(self.func, 2 * self.n_samples)

    def centroid(self):
        return complex(np.mean(self.samples))


def relative_k_loop(params, bigK, n_samples=256):
    """Loop over relative momentum ``k`` at fixed total momentum ``bigK``."""

    def energy(k):
        return free_dispersion(params, bigK / 2 + k, bigK / 2 - k)

    return SpectralLoop(energy, n_samples)


def center_of_mass_loop(params, k, n_samples=256):
    """Loop over total momentum at fixed ``k``; parameter ``t = K / 2``."""

    def energy(t):
        return free_dispersion(params, t + k, t - k)

    return SpectralLoop(energy, n_samples)


def _phase_increments(samples, base):
    z = samples - base
    if np.min(np.abs(z)) == 0.0:
        raise DegenerateLoopError("loop passes through the base point")
    ratio = np.roll(z, -1) / z
    return np.angle(ratio)


def winding_number(loop, base=None, max_samples=1 << 20):
    """Integer winding of ``loop`` around ``base``.

    The sum of the principal phase increments of ``E(t) - base`` is divided by
    ``2 pi``.  Sampling doubles until two successive levels agree and all
    increments stay below ``pi / 2``.

    Parameters
    ----------
    loop : SpectralLoop
    base : complex, optional
        Defaults to the centroid of the loop samples.

    Raises
    ------
    DegenerateLoopError
        When the loop touches ``base``.
    SamplingError
        When refinement does not settle within ``max_samples``.
    """
    if base is None:
        base = loop.centroid()
    base = complex(base)
    scale = max(np.max(np.abs(loop.samples - base)), 1.0)

    def evaluate(lp):
        samples = lp.samples
        if np.min(np.abs(samples - base)) <= 1e-13 * scale:
            raise DegenerateLoopError(f"loop passes through base point {base}")
        inc = _phase_increments(samples, base)
        total = inc.sum() / (2 * np.pi)
        return int(np.rint(total)), float(np.max(np.abs(inc))), abs(total - np.rint(total))

    w, jump, err = evaluate(loop)
    if not loop.refinable:
        if jump >= np.pi / 2 or err > 1e-6:
            raise SamplingError("fixed samples too coarse for a reliable winding")
        return w
    current = loop
    while current.n_samples <= max_samples:
        finer = current.refined()
        w2, jump2, err2 = evaluate(finer)
        if w2 == w and jump < np.pi / 2 and jump2 < np.pi / 2 and err2 < 1e-6:
            return w2
        current, w, jump = finer, w2, jump2
    raise SamplingError(f"winding did not settle up to {max_samples} samples")


def _sqrt_gap(jl, jr, e):
    # analytic continuation of sqrt(E^2 - 4 jL jR) from E -> infinity;
    # the cut of the principal sqrt is exactly the continuum segment
    e = complex(e)
    prod = 4.0 * complex(jl) * complex(jr)
    if e == 0:
        return np.sqrt(-prod + 0j)
    return e * np.sqrt(1.0 - prod / (e * e))


def green_function_diag(jl, jr, e, eps=1e-12):
    """Diagonal element ``g(K; 0, 0; E)`` of the infinite relative-chain Green function.

    Solves ``(H0 - E) g = delta`` on the chain with hoppings ``jL`` (to
    ``r - 1``) and ``jR`` (to ``r + 1``), normalised so ``g -> -1/E`` for
    large ``|E|``: ``g = -1 / sqrt(E^2 - 4 jL jR)`` on the branch continued
    from infinity.  Flipping the sign of both hoppings leaves the diagonal
    element unchanged.

    Raises
    ------
    NearSingularError
        If ``|E^2 - 4 jL jR|`` is below ``eps`` (relative to ``max(1, |E|^2)``).
    """
    e = complex(e)
    disc = e * e - 4.0 * complex(jl) * complex(jr)
    if abs(disc) < eps * max(1.0, abs(e) ** 2):
        raise NearSingularError(f"E = {e} is at a branch point of g")
    return -1.0 / _sqrt_gap(jl, jr, e)


@dataclass(frozen=True)
class BoundStateBranch:
    """Bound-state energies of the relative chain, one per ``K``.

    ``energies`` is NaN where the bound state has merged with the continuum;
    ``present`` flags the others.  ``band_edges[i]`` holds the continuum ends
    ``-+2 sqrt(jL jR)`` at ``k_values[i]``.
    """

    k_values: np.ndarray
    energies: np.ndarray
    residuals: np.ndarray
    present: np.ndarray
    band_edges: np.ndarray


def _pole_residual(u, jl, jr, e):
    return abs(1.0 + u * green_function_diag(jl, jr, e))


def _secant(f, x0, x1, tol, maxiter):
    f0, f1 = f(x0), f(x1)
    for _ in range(maxiter):
        if abs(f1) < tol:
            return x1
        denom = f1 - f0
        if denom == 0:
            break
        x0, x1, f0 = x1, x1 - f1 * (x1 - x0) / denom, f1
        f1 = f(x1)
    if abs(f1) < tol:
        return x1
    return None


def ring_green_function_diag(params, bigK, e):
    """Diagonal Green function of the periodic ``L``-site relative ring.

    Solves the same recurrence as :func:`green_function_diag` but on the ring
    produced by :func:`skinlat.model.build_relative_ring`, i.e. the exact
    finite periodic lattice: ``g = (1/L) sum_q 1 / (eps_q - E)``.
    """
    l = params.l
    ph = np.exp(1j * bigK * params.d)
    forward = -(complex(params.j1a) + complex(params.j2b) / ph)
    backward = -(complex(params.j2a) + complex(params.j1b) * ph)
    q = 2 * np.pi * np.arange(l) / l
    eps = forward * np.exp(1j * q) + backward * np.exp(-1j * q)
    denom = eps - complex(e)
    if np.min(np.abs(denom)) < 1e-12 * max(1.0, abs(e)):
        raise NearSingularError(f"E = {e} coincides with a ring level")
    return complex(np.mean(1.0 / denom))


def bound_state_branch(params, k_grid, tol=ROOT_TOL, lattice="infinite"):
    """Bound-state energy ``E_K`` solving ``1 + U g(K; 0, 0; E) = 0`` for each ``K``.

    The closed form ``sqrt(U^2 + 4 jL jR)`` (or its negative, whichever lies on
    the physical sheet) seeds a complex secant iteration.  ``K`` values where
    no pole exists off the continuum are marked absent.

    Parameters
    ----------
    params : ModelParams
    k_grid : sequence of float
        Momenta in ``[-pi, pi)``.
    lattice : {"infinite", "ring"}
        ``"infinite"`` uses the infinite relative chain.  ``"ring"`` uses the
        ``L``-site periodic ring instead; ``K`` must then be a multiple of
        ``2 pi / L`` and the poles coincide with eigenvalues of the periodic
        two-body matrix.
    """
    u = params.u
    if not u > 0:
        raise ParameterError("bound_state_branch needs u > 0")
    if lattice not in ("infinite", "ring"):
        raise ParameterError(f"unknown lattice {lattice!r}")
    ks = np.asarray(k_grid, dtype=float)
    if np.any(ks < -np.pi - 1e-12) or np.any(ks >= np.pi + 1e-12):
        raise ParameterError("k_grid must lie in [-pi, pi)")
    if lattice == "ring":
        n = ks * params.l / (2 * np.pi)
        if np.any(np.abs(n - np.rint(n)) > 1e-9):
            raise ParameterError("ring lattice needs K = 2 pi n / L")
    energies = np.full(ks.shape, np.nan + 0j)
    residuals = np.full(ks.shape, np.nan)
    present = np.zeros(ks.shape, dtype=bool)
    edges = np.zeros(ks.shape + (2,), dtype=complex)
    for i, K in enumerate(ks):
        jl, jr = hopping_coefficients(params, K)
        half = np.sqrt(complex(jl * jr) + 0j)
        edges[i] = (-2 * half, 2 * half)
        seed = np.sqrt(u * u + 4 * jl * jr + 0j)

        def f_inf(e, jl=jl, jr=jr):
            try:
                return 1.0 + u * green_function_diag(jl, jr, e)
            except NearSingularError:
                return np.inf

        def f_ring(e, K=K):
            try:
                return 1.0 + u * ring_green_function_diag(params, K, e)
            except NearSingularError:
                return np.inf

        start = None
        for cand in (seed, -seed):
            if abs(f_inf(cand)) < 1e-6:
                start = cand
                break
        if start is None:
            continue
        f = f_inf if lattice == "infinite" else f_ring
        root = _secant(f, start, start * (1 + 1e-7) + 1e-9, tol, ROOT_MAXITER)
        if root is None:
            continue
        energies[i] = root
        residuals[i] = abs(f(root))
        present[i] = True
    return BoundStateBranch(ks, energies, residuals, present, edges)


@dataclass(frozen=True)
class StatePartition:
    bound: np.ndarray
    scattering: np.ndarray


def classify_states(sol, params, ratio=3.0):
    """Split a two-body spectrum into bound and scattering states.

    States are ranked by ``|E - U|``; the largest jump in that ranking within
    the first ``2L`` states separates the bound states from the continuum.
    The jump must exceed ``ratio`` times the median adjacent jump.

    Raises
    ------
    ClassificationError
        For ``u <= 0`` or when no jump is large enough.
    """
    u, l = params.u, params.l
    if not u > 0:
        raise ClassificationError("no bound states without interaction (u <= 0)")
    dist = np.abs(sol.values - u)
    order = np.argsort(dist, kind="stable")
    ranked = dist[order]
    gaps = np.diff(ranked)
    if gaps.size == 0:
        raise ClassificationError("spectrum too small to classify")
    window = gaps[: min(2 * l, gaps.size)]
    cut = int(np.argmax(window))
    scale = max(ranked[-1], 1.0)
    median = float(np.median(gaps))
    if window[cut] <= ratio * median or window[cut] <= 1e-9 * scale:
        raise ClassificationError(
            f"largest gap {window[cut]:.3e} not above {ratio} x median {median:.3e}"
        )
    return StatePartition(np.sort(order[: cut + 1]), np.sort(order[cut + 1 :]))
