"""Hamiltonian builders for the non-reciprocal two-particle Hubbard chain.

Two distinguishable particles ``a`` and ``b`` on an ``L``-site chain are
mapped onto one particle on an ``L x L`` grid.  Grid site ``(w, v)`` holds
particle ``a`` at chain site ``w`` and particle ``b`` at chain site ``v``
(both 1-based).  The on-site interaction becomes a potential line on the
diagonal ``w == v``.

Basis ordering is row-major with ``w`` outer and ``v`` inner, see
:func:`flat_index`.  Every module in the package uses this ordering.
"""

from __future__ import annotations

import cmath
import enum
from dataclasses import dataclass

import numpy as np

from .errors import IndexRangeError, ParameterError, SingularParameterError

__all__ = [
    "Boundary",
    "ModelParams",
    "ExtendedParams",
    "flat_index",
    "unflat_index",
    "build_two_body_hamiltonian",
    "hopping_coefficients",
    "build_relative_chain",
    "build_relative_ring",
    "build_extended_hamiltonian",
    "swap_permutation",
    "shift_operator",
]


class Boundary(str, enum.Enum):
    OBC = "OBC"
    PBC = "PBC"


def _is_positive_real(z):
    z = complex(z)
    return z.imag == 0.0 and z.real > 0.0


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the two-body model.

    ``j1a``/``j2a`` are the hoppings of particle ``a`` (coefficients of
    ``psi(w+1, v)`` and ``psi(w-1, v)`` in the eigen-equation), ``j1b``/``j2b``
    those of particle ``b`` along ``v``.
    """

    j1a: complex = 1.0
    j2a: complex = 1.0
    j1b: complex = 1.0
    j2b: complex = 1.0
    u: float = 0.0
    l: int = 2
    boundary: Boundary = Boundary.OBC
    d: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if int(self.l) != self.l or self.l < 2:
            raise ParameterError(f"l must be an integer >= 2, got {self.l!r}")
        object.__setattr__(self, "l", int(self.l))
        if not np.isreal(self.u) or float(np.real(self.u)) < 0:
            raise ParameterError(f"u must be real and >= 0, got {self.u!r}")
        object.__setattr__(self, "u", float(np.real(self.u)))
        if not self.d > 0:
            raise ParameterError(f"d must be > 0, got {self.d!r}")
        for name in ("j1a", "j2a", "j1b", "j2b"):
            val = complex(getattr(self, name))
            if not cmath.isfinite(val):
                raise ParameterError(f"{name} must be finite")

    @classmethod
    def uniform(cls, j, u, l, boundary=Boundary.OBC):
        """All four hoppings equal to ``j``."""
        return cls(j, j, j, j, u, l, boundary)

    @property
    def dim(self):
        return self.l * self.l

    @property
    def positive_real(self):
        return all(_is_positive_real(j) for j in (self.j1a, self.j2a, self.j1b, self.j2b))

    @property
    def j0a(self):
        return cmath.sqrt(complex(self.j1a) * complex(self.j2a))

    @property
    def j0b(self):
        return cmath.sqrt(complex(self.j1b) * complex(self.j2b))

    def _beta(self, j1, j2, label):
        if j1 == 0 or j2 == 0:
            raise SingularParameterError(f"{label}: zero hopping makes the log undefined")
        if not (_is_positive_real(j1) and _is_positive_real(j2)):
            raise SingularParameterError(f"{label} is only defined for positive real hoppings")
        return 0.5 * np.log(float(np.real(j1)) / float(np.real(j2)))

    @property
    def beta1(self):
        """Skin exponent of particle ``b``: ``ln sqrt(j1b / j2b)``."""
        return self._beta(self.j1b, self.j2b, "beta1")

    @property
    def beta2(self):
        """Skin exponent of particle ``a``: ``ln sqrt(j1a / j2a)``."""
        return self._beta(self.j1a, self.j2a, "beta2")

    @property
    def gamma1(self):
        return 2.0 * self.beta1 / self.d

    @property
    def gamma2(self):
        return 2.0 * self.beta2 / self.d

    def with_(self, **changes):
        """Copy with some fields replaced."""
        fields = dict(
            j1a=self.j1a, j2a=self.j2a, j1b=self.j1b, j2b=self.j2b,
            u=self.u, l=self.l, boundary=self.boundary, d=self.d,
        )
        fields.update(changes)
        return ModelParams(**fields)


@dataclass(frozen=True)
class ExtendedParams:
    """Parameters of the model with two-photon pair tunneling ``p``."""

    j1: complex = 1.0
    j2: complex = 1.0
    u: float = 0.0
    p: complex = 0.0
    l: int = 4
    boundary: Boundary = Boundary.OBC

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if int(self.l) != self.l or self.l < 4 or int(self.l) % 2:
            raise ParameterError(f"l must be an even integer >= 4, got {self.l!r}")
        object.__setattr__(self, "l", int(self.l))
        if not np.isreal(self.u) or float(np.real(self.u)) < 0:
            raise ParameterError(f"u must be real and >= 0, got {self.u!r}")
        object.__setattr__(self, "u", float(np.real(self.u)))

    @property
    def lambda1(self):
        return (complex(self.j1) + complex(self.j2)) / 4.0

    @property
    def lambda2(self):
        return (complex(self.j1) - complex(self.j2)) / 4.0

    def base(self):
        """The same lattice without pair tunneling, as :class:`ModelParams`."""
        return ModelParams(self.j1, self.j2, self.j1, self.j2, self.u, self.l, self.boundary)

    def with_(self, **changes):
        fields = dict(j1=self.j1, j2=self.j2, u=self.u, p=self.p, l=self.l, boundary=self.boundary)
        fields.update(changes)
        return ExtendedParams(**fields)


def flat_index(w, v, l):
    """Row-major position of grid site ``(w, v)``; ``(w - 1) * l + (v - 1)``.

    >>> flat_index(2, 3, 5)
    7
    """
    if not (1 <= w <= l and 1 <= v <= l):
        raise IndexRangeError(f"site ({w}, {v}) outside 1..{l}")
    return (w - 1) * l + (v - 1)


def unflat_index(i, l):
    """Inverse of :func:`flat_index`."""
    if not 0 <= i < l * l:
        raise IndexRangeError(f"flat index {i} outside 0..{l * l - 1}")
    w, v = divmod(i, l)
    return w + 1, v + 1


def _neighbor(x, step, l, periodic):
    y = x + step
    if 1 <= y <= l:
        return y
    if periodic:
        return (y - 1) % l + 1
    return None


def _hopping_grid(l, j_plus_w, j_minus_w, j_plus_v, j_minus_v, periodic):
    h = np.zeros((l * l, l * l), dtype=complex)
    for w in range(1, l + 1):
        for v in range(1, l + 1):
            row = flat_index(w, v, l)
            for amp, wn, vn in (
                (j_plus_w, _neighbor(w, 1, l, periodic), v),
                (j_minus_w, _neighbor(w, -1, l, periodic), v),
                (j_plus_v, w, _neighbor(v, 1, l, periodic)),
                (j_minus_v, w, _neighbor(v, -1, l, periodic)),
            ):
                if wn is None or vn is None:
                    continue
                h[row, flat_index(wn, vn, l)] += -amp
    return h


def build_two_body_hamiltonian(params):
    """Dense ``L^2 x L^2`` Hamiltonian of the effective 2D lattice.

    Row ``(w, v)`` carries ``-j1a`` on ``(w+1, v)``, ``-j2a`` on ``(w-1, v)``,
    ``-j1b`` on ``(w, v+1)``, ``-j2b`` on ``(w, v-1)`` and ``u`` on the
    diagonal when ``w == v``.  With periodic boundaries the neighbours wrap.

    Parameters
    ----------
    params : ModelParams

    Returns
    -------
    h : (L*L, L*L) complex np.ndarray
    """
    l = params.l
    h = _hopping_grid(
        l,
        complex(params.j1a), complex(params.j2a),
        complex(params.j1b), complex(params.j2b),
        params.boundary is Boundary.PBC,
    )
    for t in range(1, l + 1):
        i = flat_index(t, t, l)
        h[i, i] += params.u
    return h


def hopping_coefficients(params, bigK):
    """Hoppings ``(jL, jR)`` of the relative-coordinate chain at momentum ``bigK``.

    ``jL`` multiplies ``psi_K(r - 1)`` and ``jR`` multiplies ``psi_K(r + 1)``
    where ``r = w - v``.  For positive real hoppings they are evaluated through
    the complex Bloch momenta ``theta = K - i*gamma``; otherwise directly from
    the hoppings, which is the same expression without the logarithms.
    """
    for name in ("j1a", "j2a", "j1b", "j2b"):
        if complex(getattr(params, name)) == 0:
            raise SingularParameterError(f"{name} = 0: skin exponent undefined")
    half = params.d / 2.0
    if params.positive_real:
        theta1 = bigK - 1j * params.gamma1
        theta2 = bigK - 1j * params.gamma2
        j0a, j0b = params.j0a.real, params.j0b.real
        jl = -j0b * cmath.exp(1j * theta1 * half) - j0a * cmath.exp(-1j * theta2 * half)
        jr = -j0b * cmath.exp(-1j * theta1 * half) - j0a * cmath.exp(1j * theta2 * half)
        return jl, jr
    ph = cmath.exp(1j * bigK * half)
    jl = -complex(params.j1b) * ph - complex(params.j2a) / ph
    jr = -complex(params.j2b) / ph - complex(params.j1a) * ph
    return jl, jr


def build_relative_chain(params, bigK, halfwidth):
    """Open relative chain ``r = -halfwidth..halfwidth`` with impurity ``u`` at ``r = 0``.

    Row ``r`` has ``jL`` in column ``r - 1`` and ``jR`` in column ``r + 1``.
    """
    if int(halfwidth) != halfwidth or halfwidth < 1:
        raise ParameterError(f"halfwidth must be an integer >= 1, got {halfwidth!r}")
    halfwidth = int(halfwidth)
    jl, jr = hopping_coefficients(params, bigK)
    n = 2 * halfwidth + 1
    h = np.zeros((n, n), dtype=complex)
    idx = np.arange(1, n)
    h[idx, idx - 1] = jl
    h[idx - 1, idx] = jr
    h[halfwidth, halfwidth] = params.u
    return h


def build_relative_ring(params, bigK):
    """Exact ``L x L`` block of the periodic Hamiltonian at total momentum ``bigK``.

    Uses the ansatz ``psi(w, v) = exp(i K v) phi((w - v) mod L)`` with
    ``bigK = 2 pi n / L``.  The ring hoppings differ from
    :func:`hopping_coefficients` by the gauge phases ``exp(+-i K / 2)``, which
    keeps the ring single valued.  Index ``i`` of the result is ``r = i``.
    """
    l = params.l
    e = cmath.exp(1j * bigK * params.d)
    forward = -(complex(params.j1a) + complex(params.j2b) / e)   # phi(r + 1)
    backward = -(complex(params.j2a) + complex(params.j1b) * e)  # phi(r - 1)
    h = np.zeros((l, l), dtype=complex)
    for r in range(l):
        h[r, (r + 1) % l] += forward
        h[r, (r - 1) % l] += backward
    h[0, 0] += params.u
    return h


def _pair_sites(l, periodic):
    # 1-based (2m, 2m+1); the wrapped pair (L, 1) exists only with PBC
    pairs = [(s, s + 1) for s in range(2, l, 2)]
    if periodic:
        pairs.append((l, 1))
    return pairs


def build_extended_hamiltonian(params, conjugate_reverse=False):
    """Two-body Hamiltonian with pair tunneling between sites ``2m`` and ``2m+1``.

    Hoppings ``-j1`` (forward) and ``-j2`` (backward) act on both grid
    coordinates and ``u`` sits on the diagonal.  The pair term couples the
    diagonal sites ``(2m, 2m)`` and ``(2m+1, 2m+1)`` with amplitude ``p`` in
    both directions.  With ``conjugate_reverse=True`` the move ``2m+1 -> 2m``
    carries ``conj(p)`` instead, the strict Hermitian-conjugate reading.
    """
    l = params.l
    h = build_two_body_hamiltonian(params.base())
    p = complex(params.p)
    if p == 0:
        return h
    for s, t in _pair_sites(l, params.boundary is Boundary.PBC):
        i, j = flat_index(s, s, l), flat_index(t, t, l)
        h[j, i] += p
        h[i, j] += np.conj(p) if conjugate_reverse else p
    return h


def swap_permutation(l):
    """Permutation matrix exchanging the two particles, ``(w, v) -> (v, w)``."""
    n = l * l
    s = np.zeros((n, n))
    for w in range(1, l + 1):
        for v in range(1, l + 1):
            s[flat_index(v, w, l), flat_index(w, v, l)] = 1.0
    return s


def shift_operator(l):
    """Simultaneous translation ``(w, v) -> (w mod L + 1, v mod L + 1)``."""
    n = l * l
    t = np.zeros((n, n))
    for w in range(1, l + 1):
        for v in range(1, l + 1):
            t[flat_index(w % l + 1, v % l + 1, l), flat_index(w, v, l)] = 1.0
    return t
