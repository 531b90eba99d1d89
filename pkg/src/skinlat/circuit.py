"""Electrical-circuit realization of the two-body lattice.

Every grid site ``(w, v)`` is a circuit node grounded through ``C0``;
diagonal nodes also have ``L0`` to ground.  Neighbouring nodes are joined by
a branch made of an INIC (negative impedance converter with current
inversion) in series with an inductor.  Such a branch is non-reciprocal: seen
from its two ends it has admittances

    R1 = Ra / (1 + i Ra omega L2),    R2 = -Ra / (1 - i Ra omega L2),

with ``Ra = i omega Ca``.  Reversing the INIC swaps ``R1`` and ``R2``.  The
``a`` branches (along ``w``) use ``(Ca, L2)``, the ``b`` branches (along
``v``) use ``(Cb, L1)``.

Sign convention
---------------
Matching ``R_i = -i omega C0 j_i`` gives the node Laplacian

    L(omega) = i omega C0 (alpha I - H),   alpha = 1 - sum_i j_i,

on bulk nodes, with ``U = 1 / (omega^2 L0 C0)`` and positive ``L0`` and
``L2``.  The opposite sign would need negative inductances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EquivalenceError, InfeasibleParametersError, ParameterError, ShapeError
from .model import Boundary, ModelParams, flat_index

__all__ = [
    "CircuitComponents",
    "EquivalenceReport",
    "Element",
    "Netlist",
    "branch_admittances",
    "inic_series_admittances",
    "solve_components",
    "laplacian_from_admittances",
    "build_laplacian",
    "verify_equivalence",
    "export_netlist",
    "render_netlist",
    "parse_netlist",
    "laplacian_from_netlist",
]

MATCH_TOL = 1e-10


@dataclass(frozen=True)
class CircuitComponents:
    """Component values in SI units.

    ``ca``/``cb`` are signed: a negative value means the INIC is mounted in
    the reverse direction with capacitance ``|ca|``.  ``inf`` stands for a
    shorted INIC (reciprocal hoppings) and ``l0 = inf`` for an absent
    grounding inductor (``U = 0``).
    """

    omega: float
    c0: float
    ca: float
    cb: float
    l1: float
    l2: float
    l0: float
    residual: float = 0.0

    @property
    def u_realized(self):
        if math.isinf(self.l0):
            return 0.0
        return 1.0 / (self.omega ** 2 * self.l0 * self.c0)

    def admittances(self):
        """``(R1, R2, R3, R4)`` of the ``a`` and ``b`` branches."""
        r1, r2 = branch_admittances(self.ca, self.l2, self.omega)
        r3, r4 = branch_admittances(self.cb, self.l1, self.omega)
        return r1, r2, r3, r4


def branch_admittances(ca, l_series, omega):
    """End admittances ``(R1, R2)`` of an INIC + inductor branch.

    ``ca = inf`` gives the plain inductor, ``1 / (i omega L)`` at both ends.
    """
    if math.isinf(ca):
        y = 1.0 / (1j * omega * l_series)
        return y, y
    return inic_series_admittances(1j * omega * ca, l_series, omega)


def inic_series_admittances(ra, l_series, omega):
    """``(R1, R2)`` for an arbitrary complex INIC admittance ``ra``."""
    ra = complex(ra)
    return ra / (1 + 1j * ra * omega * l_series), -ra / (1 - 1j * ra * omega * l_series)


def _pair(j1, j2, omega, c0, label):
    # closed form of Ca / (1 - x) = -C0 j1, -Ca / (1 + x) = -C0 j2, x = omega^2 Ca L
    j1, j2 = complex(j1), complex(j2)
    if not (j1.imag == 0 and j2.imag == 0 and j1.real > 0 and j2.real > 0):
        raise InfeasibleParametersError(
            f"{label}: hoppings ({j1}, {j2}) are not positive real; "
            "passive L with an INIC cannot realise them"
        )
    j1, j2 = j1.real, j2.real
    ind = (j1 + j2) / (2 * omega ** 2 * c0 * j1 * j2)
    cap = math.inf if j1 == j2 else 2 * c0 * j1 * j2 / (j1 - j2)
    return cap, ind


def solve_components(params, omega, c0):
    """Component values realising ``params`` at angular frequency ``omega``.

    The matching conditions ``R1 = -i omega C0 j1a``, ``R2 = -i omega C0 j2a``
    (and ``R3``, ``R4`` with ``j1b``, ``j2b``) are solved in closed form:

        Ca = 2 C0 j1 j2 / (j1 - j2),   L2 = (j1 + j2) / (2 omega^2 C0 j1 j2).

    The solution is substituted back and its relative residual checked
    against ``1e-10``.

    Raises
    ------
    InfeasibleParametersError
        For non-positive-real hoppings or ``u < 0``, or if back-substitution
        fails.
    """
    if not (omega > 0 and c0 > 0 and math.isfinite(omega) and math.isfinite(c0)):
        raise ParameterError("omega and c0 must be finite and positive")
    ca, l2 = _pair(params.j1a, params.j2a, omega, c0, "particle a")
    cb, l1 = _pair(params.j1b, params.j2b, omega, c0, "particle b")
    u = float(params.u)
    if u < 0:
        raise InfeasibleParametersError("u < 0 would need a negative L0")
    l0 = math.inf if u == 0 else 1.0 / (omega ** 2 * c0 * u)
    comp = CircuitComponents(omega, c0, ca, cb, l1, l2, l0)
    targets = [-1j * omega * c0 * complex(j) for j in (params.j1a, params.j2a, params.j1b, params.j2b)]
    residual = max(abs(r - t) / abs(t) for r, t in zip(comp.admittances(), targets))
    if residual > MATCH_TOL:
        raise InfeasibleParametersError(
            f"matching residual {residual:.2e} exceeds {MATCH_TOL:.0e}"
        )
    return CircuitComponents(omega, c0, ca, cb, l1, l2, l0, residual)


def _edges(l, periodic):
    """Directed lattice bonds ``(node_a, node_b, kind)`` with ``node_b`` the forward neighbour."""
    out = []
    for w in range(1, l + 1):
        for v in range(1, l + 1):
            if w < l or (periodic and l > 1):
                out.append(((w, v), (w % l + 1, v), "a"))
            if v < l or (periodic and l > 1):
                out.append(((w, v), (w, v % l + 1), "b"))
    return out


def laplacian_from_admittances(l, omega, c0, l0, r1=0, r2=0, r3=0, r4=0, periodic=False):
    """Node Laplacian for given branch admittances.

    Works for any ``l >= 1``.  Row ``(w, v)`` holds ``-R1`` towards
    ``(w+1, v)``, ``-R2`` towards ``(w-1, v)``, ``-R3``/``-R4`` along ``v``,
    and on the diagonal ``i omega C0`` plus the admittances of its branches
    (plus ``1 / (i omega L0)`` when ``w == v``).
    """
    n = l * l
    lap = np.zeros((n, n), dtype=complex)
    lap[np.diag_indices(n)] = 1j * omega * c0
    ends = {"a": (r1, r2), "b": (r3, r4)}
    for a, b, kind in _edges(l, periodic):
        ya, yb = ends[kind]
        _stamp(lap, flat_index(*a, l), flat_index(*b, l), ya, yb)
    if not math.isinf(l0):
        for t in range(1, l + 1):
            i = flat_index(t, t, l)
            lap[i, i] += 1.0 / (1j * omega * l0)
    return lap


def _stamp(lap, i, j, yi, yj):
    lap[i, i] += yi
    lap[i, j] -= yi
    lap[j, j] += yj
    lap[j, i] -= yj


def build_laplacian(components, params):
    """Circuit Laplacian ``L(omega)`` with ``I = L V`` for the lattice of ``params``."""
    r1, r2, r3, r4 = components.admittances()
    return laplacian_from_admittances(
        params.l, components.omega, components.c0, components.l0,
        r1, r2, r3, r4, params.boundary is Boundary.PBC,
    )


@dataclass(frozen=True)
class EquivalenceReport:
    alpha: complex
    sigma: complex
    max_dev: float
    worst: tuple

    @property
    def sigma_is_unit_real(self):
        return abs(self.sigma.imag) < 1e-9 and abs(abs(self.sigma) - 1) < 1e-9


def verify_equivalence(laplacian, hamiltonian, omega, c0, tol=None):
    """Fit ``L = i omega C0 (alpha I + sigma H)`` and report the worst deviation.

    ``alpha`` and ``sigma`` solve the 2x2 least-squares normal equations in
    the Frobenius inner product.  ``worst`` is the ``(row, col)`` index of the
    largest ``|L - fit|`` entry.

    Raises
    ------
    EquivalenceError
        If ``tol`` is given and ``max_dev > tol`` or ``sigma`` is not a real
        unit.
    """
    lap = np.asarray(laplacian, dtype=complex)
    h = np.asarray(hamiltonian, dtype=complex)
    if lap.shape != h.shape or lap.ndim != 2 or lap.shape[0] != lap.shape[1]:
        raise ShapeError(f"shape mismatch {lap.shape} vs {h.shape}")
    n = h.shape[0]
    a = lap / (1j * omega * c0)
    gram = np.array([[n, np.trace(h)], [np.conj(np.trace(h)), np.vdot(h, h)]])
    rhs = np.array([np.trace(a), np.vdot(h, a)])
    (alpha, sigma), *_ = np.linalg.lstsq(gram, rhs, rcond=None)
    dev = np.abs(lap - 1j * omega * c0 * (alpha * np.eye(n) + sigma * h))
    worst = np.unravel_index(int(np.argmax(dev)), dev.shape)
    report = EquivalenceReport(complex(alpha), complex(sigma), float(dev.max()),
                               (int(worst[0]), int(worst[1])))
    if tol is not None and (report.max_dev > tol or not report.sigma_is_unit_real):
        raise EquivalenceError(
            f"max deviation {report.max_dev:.3e} at {report.worst}, sigma={report.sigma:.6g}",
            report,
        )
    return report


@dataclass(frozen=True)
class Element:
    kind: str
    node_a: str
    node_b: str
    value: float
    orientation: str = ""


@dataclass(frozen=True)
class Netlist:
    header: list
    elements: list = field(default_factory=list)
    l: int = 0

    def text(self):
        return render_netlist(self)

    def count(self, kind):
        return sum(1 for e in self.elements if e.kind == kind)


def _node(site):
    return f"N_{site[0]}_{site[1]}"


def export_netlist(components, params):
    """Element list of the full circuit.

    Line format ``KIND nodeA nodeB value [orientation]`` with kinds ``C``,
    ``L`` and ``INIC``.  An ``INIC`` line is always followed by the ``L`` line
    on the same node pair; together they form one series branch.  The INIC
    value is ``|Ca|`` in farads (``Ra = i omega Ca``); orientation ``+`` means
    the ``R1`` end is ``nodeA``.  Reciprocal bonds emit only the inductor.
    """
    l = params.l
    header = [
        "skinlat netlist",
        f"omega {components.omega!r}",
        f"c0 {components.c0!r}",
        f"target j1a={params.j1a!r} j2a={params.j2a!r} j1b={params.j1b!r} j2b={params.j2b!r} "
        f"u={params.u!r} l={l} boundary={params.boundary.value}",
        "INIC value is |C| with R = i*omega*C; '+' puts the R1 end on nodeA",
    ]
    els = []
    for w in range(1, l + 1):
        for v in range(1, l + 1):
            els.append(Element("C", _node((w, v)), "GND", components.c0))
    series = {"a": (components.ca, components.l2), "b": (components.cb, components.l1)}
    for a, b, kind in _edges(l, params.boundary is Boundary.PBC):
        cap, ind = series[kind]
        if not math.isinf(cap):
            els.append(Element("INIC", _node(a), _node(b), abs(cap), "+" if cap > 0 else "-"))
        els.append(Element("L", _node(a), _node(b), ind))
    # same accumulation order as build_laplacian, so a rebuild is bit-exact
    if not math.isinf(components.l0):
        for t in range(1, l + 1):
            els.append(Element("L", _node((t, t)), "GND", components.l0))
    return Netlist(header, els, l)


def render_netlist(netlist):
    lines = [f"* {h}" for h in netlist.header]
    for e in netlist.elements:
        parts = [e.kind, e.node_a, e.node_b, format(e.value, ".17g")]
        if e.orientation:
            parts.append(e.orientation)
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def parse_netlist(text):
    """Inverse of :func:`render_netlist`."""
    header, els = [], []
    nodes = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("*"):
            header.append(line[1:].strip())
            continue
        parts = line.split()
        if parts[0] not in ("C", "L", "INIC") or len(parts) not in (4, 5):
            raise ParameterError(f"line {lineno}: cannot parse {raw!r}")
        orient = parts[4] if len(parts) == 5 else ""
        els.append(Element(parts[0], parts[1], parts[2], float(parts[3]), orient))
        nodes.update(n for n in parts[1:3] if n != "GND")
    side = max((int(n.split("_")[1]) for n in nodes), default=0)
    return Netlist(header, els, side)


def _header_value(netlist, key):
    for h in netlist.header:
        parts = h.split()
        if len(parts) == 2 and parts[0] == key:
            return float(parts[1])
    raise ParameterError(f"netlist header lacks {key!r}")


def laplacian_from_netlist(netlist, omega=None):
    """Nodal admittance matrix rebuilt element by element from a netlist."""
    if omega is None:
        omega = _header_value(netlist, "omega")
    l = netlist.l
    index = {}
    for w in range(1, l + 1):
        for v in range(1, l + 1):
            index[_node((w, v))] = flat_index(w, v, l)
    lap = np.zeros((l * l, l * l), dtype=complex)
    pending = None
    for e in netlist.elements:
        if e.kind == "INIC":
            pending = e
            continue
        y = 1j * omega * e.value if e.kind == "C" else 1.0 / (1j * omega * e.value)
        if e.node_b == "GND":
            lap[index[e.node_a], index[e.node_a]] += y
            continue
        i, j = index[e.node_a], index[e.node_b]
        if pending is not None:
            if (pending.node_a, pending.node_b) != (e.node_a, e.node_b) or e.kind != "L":
                raise ParameterError("INIC must be followed by its series inductor")
            cap = pending.value if pending.orientation == "+" else -pending.value
            yi, yj = branch_admittances(cap, e.value, omega)
            pending = None
        else:
            yi = yj = y
        _stamp(lap, i, j, yi, yj)
    if pending is not None:
        raise ParameterError("dangling INIC without series inductor")
    return lap
