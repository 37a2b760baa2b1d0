"""One-particle scattering route against the coefficient assembly.

Full-size runs live in the acceptance suite; these tests exercise the
machinery at coarse grids.
"""

import numpy as np
import pytest

from ldlkit.scattering import (
    DEFAULT_ALIGNMENT,
    DEFAULT_DIRECTION,
    GridSpace,
    band_elements,
    coupling_operator,
    cross_check,
    eta_stability,
    evolve_one_particle,
    intertwining_residual,
    moller_plus,
    t_operator_dynamic,
    t_operator_spectral,
)
from ldlkit.spectral import SystemModel, model_m1, system_m1

M1 = model_m1()
SYS1 = system_m1()
ZERO_SYS = SystemModel(2, np.zeros((2, 2)))


def test_grid_band_norms():
    grid = GridSpace.build(M1, 48)
    for eps in (0, 1):
        mass = float(np.sum(grid.g_vec(eps) ** 2))
        x, w = np.polynomial.legendre.leggauss(400)
        a, b = M1.support(eps)
        xs = 0.5 * (b - a) * x + 0.5 * (b + a)
        exact = 0.5 * (b - a) * float(np.sum(w * M1.rho(eps, xs)))
        assert mass == pytest.approx(exact, rel=1e-3)
    assert float(np.dot(grid.g_vec(0), grid.g_vec(1))) == 0.0
    assert np.all(grid.h1_diagonal()[grid.band_of == 0]
                  == grid.energies[grid.band_of == 0] + M1.omega0)


def test_evolution_identity_at_zero_coupling():
    grid = GridSpace.build(M1, 12)
    u = evolve_one_particle(grid, ZERO_SYS, 3.0, 0.05)
    assert np.allclose(u, np.eye(u.shape[0]))


def test_evolution_first_order():
    grid = GridSpace.build(M1, 24)
    t = 1e-3
    u = evolve_one_particle(grid, SYS1, t, t)
    v1 = coupling_operator(grid, SYS1)
    assert np.linalg.norm(u - (np.eye(u.shape[0]) - 1j * t * v1)) <= 1e-6


def test_evolution_unitarity_long_run():
    grid = GridSpace.build(M1, 32)  # 64-point grid
    u = evolve_one_particle(grid, SYS1, 50.0, 0.02)
    n = u.shape[0]
    defect = np.linalg.norm(u.conj().T @ u - np.eye(n)) / 50.0
    assert defect <= 1e-8


def test_moller_identity_at_zero_coupling():
    grid = GridSpace.build(M1, 12)
    omega = moller_plus(grid, ZERO_SYS, t_max=80.0, abel_eta=0.25, dt=0.05)
    assert np.linalg.norm(omega - np.eye(omega.shape[0])) <= 1e-6


def test_moller_isometry_on_random_vectors():
    grid = GridSpace.build(M1, 24)
    omega = moller_plus(grid, SYS1, t_max=160.0, abel_eta=0.1, dt=0.05)
    rng = np.random.default_rng(2)
    for _ in range(4):
        x = rng.normal(size=omega.shape[0]) + 1j * rng.normal(size=omega.shape[0])
        assert abs(np.linalg.norm(omega @ x) / np.linalg.norm(x) - 1.0) <= 1e-2


def test_moller_intertwining():
    grid = GridSpace.build(M1, 24)
    omega = moller_plus(grid, SYS1, t_max=160.0, abel_eta=0.1, dt=0.05)
    assert intertwining_residual(grid, SYS1, omega) <= 1e-2


def test_t_operators_zero_coupling():
    grid = GridSpace.build(M1, 12)
    t_dyn = t_operator_dynamic(grid, ZERO_SYS, t_max=40.0, abel_eta=0.25,
                               dt=0.05)
    t_spec = t_operator_spectral(grid, ZERO_SYS, M1)
    assert np.allclose(t_dyn, 0.0)
    assert np.allclose(t_spec, 0.0)


def test_band_selection_orthogonality():
    """A single off-diagonal coefficient piece |g_0><g_1| never reaches the
    (band 0 | band 0) elements: the band vectors are exactly orthogonal."""
    from ldlkit.spectral import r_matrix

    grid = GridSpace.build(M1, 16)
    n = grid.size
    piece = np.zeros((SYS1.dim, n, SYS1.dim, n), complex)
    r_vals = np.array([r_matrix(M1, SYS1, 0, 1, float(e))
                       for e in grid.energies])
    piece += np.einsum("jab,i,j->aibj", r_vals, grid.g_vec(0), grid.g_vec(1))
    el = band_elements(grid, SYS1, piece.reshape(SYS1.dim * n, SYS1.dim * n))
    assert np.abs(el[:, 0, :, 0]).max() == 0.0
    assert np.abs(el[:, 1, :, 1]).max() == 0.0
    assert np.abs(el[:, 0, :, 1]).max() > 1e-4


def test_cross_check_convention_and_agreement_coarse():
    grid = GridSpace.build(M1, 16)  # 32-point grid
    res = cross_check(grid, SYS1, M1, t_max=240.0, abel_eta=0.05, dt=0.04)
    assert res["direction"] == DEFAULT_DIRECTION
    assert res["alignment"] == DEFAULT_ALIGNMENT
    assert res["max_dominant_rel_error"] <= 5e-2


def test_eta_stability_coarse():
    # coarse settings exercise the machinery; the acceptance run holds the
    # 1e-2 bar at the production grid and eta pair
    grid = GridSpace.build(M1, 16)
    rel = eta_stability(grid, SYS1, t_max=120.0, abel_eta=0.1, dt=0.04)
    assert rel <= 5e-2


def test_weak_coupling_alignment():
    """At weak coupling the spectral assembly is -i times the first Born
    term, so the alignment factor is exact, not a strong-coupling artifact."""
    weak = SystemModel(2, 0.05 * SYS1.d_matrix)
    grid = GridSpace.build(M1, 16)
    res = cross_check(grid, weak, M1, t_max=240.0, abel_eta=0.05, dt=0.04)
    assert res["direction"] == DEFAULT_DIRECTION
    assert res["alignment"] == DEFAULT_ALIGNMENT
    assert res["max_dominant_rel_error"] <= 1e-2
