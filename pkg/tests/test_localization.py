import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skinlat.eig import eigendecompose
from skinlat.errors import FitError, IndexRangeError, ShapeError
from skinlat.localization import (
    DensityProfile,
    center_of_mass_profile,
    density,
    find_maxima,
    fit_scaling_factor,
    gauge_matrix_diagonal,
    gauge_transform,
    relative_cut,
)
from skinlat.model import Boundary, ModelParams, build_two_body_hamiltonian, flat_index

from _util import matched_deviation


def _basis(w, v, l):
    vec = np.zeros(l * l, dtype=complex)
    vec[flat_index(w, v, l)] = 1
    return vec


def _top_state(params):
    sol = eigendecompose(build_two_body_hamiltonian(params))
    return sol, density(sol.vector(0), params.l, sol.values[0])


def test_density_examples():
    prof = density(_basis(3, 3, 5), 5)
    assert prof.at(3, 3) == 1 and prof.grid.sum() == 1
    uniform = density(np.full(16, 0.25), 4)
    assert np.allclose(uniform.grid, 1 / 16)
    assert prof.total == pytest.approx(1.0)
    with pytest.raises(ShapeError):
        density(np.ones(10), 3)


def test_relative_cut_examples():
    prof = density(_basis(3, 3, 5), 5)
    cut = relative_cut(prof, 3)
    assert [r for r, _ in cut] == [-2, -1, 0, 1, 2]
    assert dict(cut)[0] == 1
    edge = relative_cut(prof, 1)
    assert [r for r, _ in edge] == [0, 1, 2, 3, 4]
    with pytest.raises(IndexRangeError):
        relative_cut(prof, 6)


def test_fit_synthetic_exponential():
    cut = [(r, np.exp(-3 * abs(r))) for r in range(-10, 11)]
    fit = fit_scaling_factor(cut)
    assert fit.eta == pytest.approx(3.0, abs=1e-9)
    assert fit.left.eta == pytest.approx(3.0, abs=1e-9)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.window == (1.0, 8.0)
    one = fit_scaling_factor(cut, "right")
    assert one.n_points == 8 and one.left is None


def test_fit_asymmetric_and_errors():
    cut = [(r, np.exp(-2 * r) if r > 0 else np.exp(3 * r)) for r in range(-9, 10)]
    fit = fit_scaling_factor(cut)
    assert fit.left.eta == pytest.approx(3.0) and fit.right.eta == pytest.approx(2.0)
    assert fit.eta == pytest.approx(2.5)
    with pytest.raises(FitError):
        fit_scaling_factor([(r, np.exp(-abs(r))) for r in range(-4, 5)])
    with pytest.raises(FitError):
        fit_scaling_factor([(r, 1e-20) for r in range(-10, 11)])
    with pytest.raises(ValueError):
        fit_scaling_factor(cut, "up")


def test_hermitian_scaling_factor_vs_impurity_chain():
    _, prof = _top_state(ModelParams.uniform(1.0, 10.0, 31, Boundary.OBC))
    fit = fit_scaling_factor(relative_cut(prof, 16))
    assert fit.eta == pytest.approx(2 * np.arcsinh(10 / 4), rel=0.1)
    assert fit.r_squared > 0.999


def test_non_reciprocal_one_sided_exponents():
    # density (|psi|^2) carries exp(-2 beta (w + v)); along a cut at fixed v the
    # two sides shift by -+2 beta from the reciprocal value with the same J0
    p = ModelParams(1.0, 1.6, 1.0, 1.6, 5.0, 31, Boundary.OBC)
    _, prof = _top_state(p)
    fit = fit_scaling_factor(relative_cut(prof, 16))
    beta = p.beta2
    eta0 = 2 * np.arcsinh(5 / (4 * np.sqrt(1.6)))
    assert fit.left.eta == pytest.approx(eta0 - 2 * beta, rel=0.1)
    assert fit.right.eta == pytest.approx(eta0 + 2 * beta, rel=0.1)
    assert fit.left.eta - fit.right.eta == pytest.approx(4 * abs(beta), rel=0.1)


def test_center_of_mass_profiles():
    _, prof = _top_state(ModelParams.uniform(1.0, 10.0, 21, Boundary.OBC))
    com = center_of_mass_profile(prof)
    assert [t for t, _ in com] == list(range(1, 22))
    assert max(com, key=lambda x: x[1])[0] == 11
    _, pbc = _top_state(ModelParams.uniform(1.6, 10.0, 12, Boundary.PBC))
    vals = np.array([rho for _, rho in center_of_mass_profile(pbc)])
    assert np.ptp(vals) < 1e-10
    sol = eigendecompose(build_two_body_hamiltonian(ModelParams(1.005, 1.0, 1.005, 1.0, 10.0, 20)))
    i = int(np.argmin(np.abs(sol.values.real - 10.0)))
    diag = np.diag(density(sol.vector(i), 20).grid)
    assert np.abs(diag - diag[::-1]).max() > 1e-3


def test_gauge_examples():
    p = ModelParams(1.2, 0.6, 0.9, 1.7, 4.0, 5, Boundary.OBC)
    h = build_two_body_hamiltonian(p)
    assert np.array_equal(gauge_transform(h, 0.0, 0.0, 5), h)
    hp = gauge_transform(h, p.beta1, p.beta2, 5)
    assert np.abs(hp - hp.conj().T).max() < 1e-12
    assert matched_deviation(np.linalg.eigvals(h), np.linalg.eigvals(hp)) < 1e-8
    m = gauge_matrix_diagonal(0.1, 0.2, 5)
    assert m[flat_index(2, 3, 5)] == pytest.approx(np.exp(-0.1 * 3 - 0.2 * 2))
    with pytest.raises(ShapeError):
        gauge_transform(h, 0.0, 0.0, 4)


@settings(max_examples=15, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.sampled_from([Boundary.OBC, Boundary.PBC]))
def test_gauge_spectral_invariance(b1, b2, boundary):
    h = build_two_body_hamiltonian(ModelParams(1.0, 1.6, 1.6, 1.1, 5.0, 6, boundary))
    hp = gauge_transform(h, b1, b2, 6)
    assert matched_deviation(np.linalg.eigvals(h), np.linalg.eigvals(hp)) < 1e-8


def test_find_maxima_examples():
    w, v = np.meshgrid(np.arange(1, 21), np.arange(1, 21), indexing="ij")
    bump = np.exp(-((w - 7) ** 2 + (v - 12) ** 2) / 8.0)
    peaks = find_maxima(DensityProfile(bump / bump.sum(), 1.0))
    assert [(a, b) for a, b, _ in peaks] == [(7, 12)]
    two = bump + 0.8 * np.exp(-((w - 15) ** 2 + (v - 4) ** 2) / 8.0)
    peaks = find_maxima(DensityProfile(two, 1.0))
    assert [(a, b) for a, b, _ in peaks] == [(7, 12), (15, 4)]
    assert find_maxima(DensityProfile(two, 1.0), prominence=0.9) == [peaks[0]]
    assert find_maxima(DensityProfile(np.zeros((3, 3)), 0.0)) == []
    with pytest.raises(ValueError):
        find_maxima(DensityProfile(two, 1.0), prominence=1.0)


def test_find_maxima_merges_close_peaks():
    grid = np.zeros((9, 9))
    grid[4, 4] = 1.0
    grid[4, 6] = 0.9  # two sites away: merged into the higher one
    assert len(find_maxima(DensityProfile(grid, 1.9))) == 1


def test_hermitian_central_symmetry_and_bsl():
    sol = eigendecompose(build_two_body_hamiltonian(ModelParams.uniform(1.0, 10.0, 12, Boundary.OBC)))
    vals = sol.values.real
    checked = 0
    for i in range(len(vals)):
        others = np.delete(vals, i)
        if np.min(np.abs(others - vals[i])) < 1e-6:
            continue
        g = density(sol.vector(i), 12).grid
        assert np.abs(g - g[::-1, ::-1]).max() < 1e-10
        checked += 1
    assert checked > 50
    g = density(sol.vector(0), 12).grid
    r = np.abs(np.subtract.outer(np.arange(12), np.arange(12)))
    assert g[r >= 3].max() < 1e-2 * np.diag(g).max()


def test_density_normalised_for_all_states():
    sol = eigendecompose(build_two_body_hamiltonian(ModelParams(1.0, 1.6, 1.0, 1.6, 5.0, 8)))
    for i in range(len(sol)):
        assert density(sol.vector(i), 8).total == pytest.approx(1.0, abs=1e-10)
