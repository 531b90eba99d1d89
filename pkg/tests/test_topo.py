import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skinlat.eig import eigendecompose
from skinlat.errors import GaplessError
from skinlat.model import Boundary, ExtendedParams, build_extended_hamiltonian
from skinlat.spectra import classify_states
from skinlat.topo import (
    PAULI_X,
    SshBloch,
    bloch_bands,
    bloch_spectral_windings,
    bloch_vector,
    detect_corner_modes,
    effective_ssh_bloch,
    gap_scan,
    ssh_winding,
)


def _params(j1=1.0, j2=1.0, u=25.0, p=5.0, l=20, boundary=Boundary.OBC):
    return ExtendedParams(j1, j2, u, p, l, boundary)


def test_bloch_matrix_trivial_point():
    ep = _params(p=0.0)
    l1 = ep.lambda1
    expected = (25 + 2 * l1) * np.eye(2) + 2 * l1 * PAULI_X
    assert np.allclose(effective_ssh_bloch(ep, 0.0), expected)


def test_bloch_matrix_at_k_pi():
    ep = _params(p=1.0)
    dx, dy = bloch_vector(ep, np.pi)
    assert dx == pytest.approx(-1.0) and abs(dy) < 1e-15
    # centre U + 1, splitting |d| = 1
    ev = np.sort(np.linalg.eigvals(effective_ssh_bloch(ep, np.pi)).real)
    assert np.allclose(ev, [25, 27])


def test_bloch_dataclass_round_trip():
    ep = _params(j1=1.2, j2=0.8, p=1 + 1j)
    s = SshBloch.from_params(ep, 0.7)
    assert np.array_equal(s.matrix(), effective_ssh_bloch(ep, 0.7))
    assert s.j_total == pytest.approx(2.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 3), st.floats(-6, 6), st.floats(-np.pi, np.pi))
def test_bloch_hermitian_when_reciprocal(j, p, k):
    m = effective_ssh_bloch(_params(j1=j, j2=j, p=p), k)
    assert np.array_equal(m, m.conj().T)


def test_bands_match_matrix_eigenvalues():
    ep = _params(j1=1.2, j2=0.8, p=1 + 1j)
    ks = np.linspace(-3, 3, 7)
    lo, hi = bloch_bands(ep, ks)
    for k, a, b in zip(ks, lo, hi):
        ev = np.linalg.eigvals(effective_ssh_bloch(ep, k))
        assert min(abs(ev - a)) < 1e-12 and min(abs(ev - b)) < 1e-12


def test_winding_topological_and_doubling_invariant():
    ep = _params(p=5.0)
    w = ssh_winding(ep)
    assert abs(w) == 1
    assert ssh_winding(ep, n_k=1024) == w


def test_winding_other_side_of_transition():
    # the Bloch gap of this model closes at P = -2 lambda1, not at +2 lambda1
    assert ssh_winding(_params(p=-0.2)) == 0
    assert ssh_winding(_params(p=0.2)) == ssh_winding(_params(p=5.0))
    with pytest.raises(GaplessError):
        ssh_winding(_params(p=-1.0))


def test_gap_scan_examples():
    scan = dict(gap_scan(_params(), [-1.0, 0.0, 5.0, 1.0]))
    assert scan[-1.0] < 1e-3
    assert scan[0.0] < 1e-6
    assert scan[5.0] >= 7.9
    assert scan[1.0] == pytest.approx(2.0, abs=1e-9)


def test_spectral_windings_fig6b():
    p = 1 + 1j
    assert bloch_spectral_windings(_params(j1=4.0, j2=0.0, p=p)) == [-1]
    assert bloch_spectral_windings(_params(j1=2.0, j2=2.0, p=p)) == [0, 0]
    # lambda1 = 0 is reported as measured
    assert bloch_spectral_windings(_params(j1=2.0, j2=-2.0, p=p)) == [-1, -1]
    assert bloch_spectral_windings(_params(p=3.0)) == [0, 0]


def _report(**kw):
    ep = _params(**kw)
    sol = eigendecompose(build_extended_hamiltonian(ep))
    return sol, detect_corner_modes(sol, ep)


def test_corner_modes_hermitian():
    sol, rep = _report()
    assert len(rep) == 2
    assert sorted(rep.dominant_corners()) == ["first", "last"]
    lo, hi = rep.gap_bounds
    assert all(lo < e.real < hi for e in rep.energies)
    assert np.all((rep.corner_weights >= 0) & (rep.corner_weights <= 1))
    assert rep.corner_weights.max(axis=1).min() > 0.99
    for j, i in enumerate(rep.in_gap_indices):
        assert np.abs(rep.vectors[:, j]).max() > 0
        assert sol.values[i] == rep.energies[j]


def test_corner_modes_absent_in_trivial_phase():
    _, rep = _report(p=-0.1)
    assert len(rep) == 0
    assert rep.vectors.shape[1] == 0


def test_corner_modes_non_hermitian_measured():
    _, rep = _report(j1=1.2, j2=0.8)
    assert len(rep) == 2
    assert rep.corner_weights.max(axis=1).min() > 0.5


def test_corner_modes_follow_doublon_chain_not_bloch_boundary():
    # second-order doublon chain: intra-pair bond P + 2J^2/U, inter-pair 2J^2/U;
    # edge pairs exist unless -4J^2/U < P < 0
    for p, expected in ((0.6, 2), (-0.6, 2), (-0.1, 0), (3.0, 2)):
        _, rep = _report(p=p)
        assert len(rep) == expected, p


def _doublon_chain(l, u, j1, j2, p):
    h = np.zeros((l, l))
    for t in range(l):
        h[t, t] = u + 2 * ((t > 0) + (t < l - 1)) * j1 * j2 / u
        if t < l - 1:
            h[t, t + 1] = 2 * j1 * j1 / u
            h[t + 1, t] = 2 * j2 * j2 / u
    for s in range(1, l - 1, 2):
        h[s, s + 1] += p
        h[s + 1, s] += p
    return np.sort(np.linalg.eigvals(h).real)


def test_strong_coupling_bound_band():
    ep = _params()
    sol = eigendecompose(build_extended_hamiltonian(ep))
    bound = np.sort(sol.values[classify_states(sol, ep).bound].real)
    assert len(bound) == 20
    ref = _doublon_chain(20, 25.0, 1.0, 1.0, 5.0)
    assert np.abs(bound - ref).max() < 4 * 1.0 / 25.0
