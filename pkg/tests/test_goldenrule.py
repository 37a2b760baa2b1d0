"""Mechanical re-derivation of the limit equation and its verification."""

import numpy as np
import pytest

from ldlkit.algebra import to_text, vacuum_expectation
from ldlkit.errors import DomainError
from ldlkit.goldenrule import (
    Instantiation,
    commutator_with_evolution,
    derive_qsde,
    drift_from_equation,
    fm_consistency,
    verify_resummation_identity,
    verify_drift_emergence,
    verify_number_emergence,
)
from ldlkit.spectral import (
    GaussianBand,
    SpectralModel,
    SystemModel,
    gamma_eps,
    model_m1,
    system_m1,
    t_eps_matrix,
    weight_w,
)

M1 = model_m1()
SYS1 = system_m1()


def test_mechanical_expansion_matches_proof_form():
    """-i D_0 [B_{1,0}(E,t), U_t] comes out exactly as the product of the
    coupling pair, the other band's gamma, and the weight plus annihilator."""
    from ldlkit.algebra import scalars as sc
    from ldlkit.algebra.expr import Expr
    from ldlkit.algebra.symbols import d_sys

    f = Expr.of(d_sys(0), coeff=sc.MINUS_I) * commutator_with_evolution(1, 0)
    text = to_text(f)
    assert "sys{D0 D1}" in text
    assert "gamma(1,E) w(0,E)} word{U(t)}" in text
    assert "word{B[0,0](*,E;t) U(t)}" in text
    assert all(t.coeff.to_complex() == -1 for t in f.terms)


def test_resummation_identity_zero_coupling():
    assert verify_resummation_identity(SystemModel(3, np.zeros((3, 3))), 1 + 1j, 2 - 1j) == 0


def test_resummation_identity_random():
    rng = np.random.default_rng(5)
    for _ in range(30):
        d = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        g0 = complex(rng.uniform(0.1, 10), rng.uniform(-10, 10))
        g1 = complex(rng.uniform(0.1, 10), rng.uniform(-10, 10))
        assert verify_resummation_identity(SystemModel(4, d), g0, g1) <= 1e-12


def test_resummation_identity_projection_case():
    # two-level dyad with unit gammas: both sides act as i D / 2 on range
    res = verify_resummation_identity(SYS1, 1.0 + 0j, 1.0 + 0j)
    assert res <= 1e-14
    inst = Instantiation(SYS1.d_matrix, (1.0 + 0j, 1.0 + 0j), (1.0, 1.0))
    lhs = 1j * (inst.t_eps(0) @ inst.d_eps(0))
    assert np.allclose(lhs, 0.5j * inst.d_eps(0), atol=1e-14)


def test_drift_emergence_zero_coupling():
    inst = Instantiation(np.zeros((2, 2), complex), (1 + 1j, 2 - 1j), (0.5, 0.7))
    assert verify_drift_emergence(None, inst=inst) == 0


def test_drift_emergence_m1_point():
    assert verify_drift_emergence(SYS1, model=M1, energy=2.0) <= 1e-12


def test_drift_emergence_random():
    rng = np.random.default_rng(17)
    for _ in range(40):
        inst = Instantiation.random(rng, int(rng.integers(2, 6)))
        assert verify_drift_emergence(None, inst=inst) <= 1e-12


def test_number_emergence_zero_coupling():
    inst = Instantiation(np.zeros((2, 2), complex), (1 + 1j, 2 - 1j), (0.5, 0.7))
    assert verify_number_emergence(None, inst=inst) == 0


def test_number_emergence_m1_point():
    assert verify_number_emergence(SYS1, model=M1, energy=2.0) <= 1e-12


def test_number_emergence_random():
    rng = np.random.default_rng(23)
    for _ in range(25):
        inst = Instantiation.random(rng, int(rng.integers(2, 6)))
        assert verify_number_emergence(None, inst=inst) <= 1e-12


def test_number_emergence_band_swap_symmetry():
    """Swapping the band data and conjugating the coupling swaps the roles
    of the two bands without changing the residual profile."""
    rng = np.random.default_rng(31)
    for _ in range(5):
        inst = Instantiation.random(rng, 3)
        swapped = Instantiation(inst.d_matrix.conj().T,
                                (inst.gamma[1], inst.gamma[0]),
                                (inst.w[1], inst.w[0]))
        r1 = verify_number_emergence(None, inst=inst)
        r2 = verify_number_emergence(None, inst=swapped)
        assert abs(r1 - r2) <= 1e-12


def test_derive_qsde_zero_coupling():
    z = SystemModel(2, np.zeros((2, 2)))
    co = derive_qsde(z, M1, symbolic=False)
    for eps in (0, 1):
        for epsp in (0, 1):
            assert np.allclose(co.r_map(eps, epsp, 2.0), 0.0)
    assert np.allclose(co.drift(), 0.0)


def test_derive_qsde_two_level_projection():
    co = derive_qsde(SYS1, M1, symbolic=False)
    e = 2.0
    g0 = gamma_eps(M1, 0, e)
    g1 = gamma_eps(M1, 1, e)
    r00 = co.r_map(0, 0, e)
    assert r00[0, 0] == pytest.approx(-g1 / (1.0 + g0 * g1), rel=1e-13)
    assert abs(r00[0, 1]) + abs(r00[1, 0]) + abs(r00[1, 1]) == 0.0


def test_derive_qsde_creation_coefficient():
    co = derive_qsde(SYS1, M1, symbolic=False)
    e = 2.1
    for eps in (0, 1):
        expected = -1j * (t_eps_matrix(M1, SYS1, eps, e) @ SYS1.d_eps(eps))
        assert np.allclose(co.r_map(eps, 1 - eps, e), expected, atol=1e-14)


def test_symbolic_integrand_structure():
    co = derive_qsde(SYS1, M1, symbolic=True)
    # seven structural families per band
    assert len(co.integrand.terms) == 18
    vac = vacuum_expectation(co.integrand)
    assert len(vac.terms) == 2  # one drift term per band survives vacuum


def test_drift_two_routes_agree():
    co = derive_qsde(SYS1, M1, symbolic=True)
    for e in (1.6, 2.0, 2.5, 4.7, 5.4):
        inst = Instantiation.from_model(M1, SYS1, float(e))
        a = drift_from_equation(co, inst)
        b = co.drift_integrand(float(e))
        assert np.linalg.norm(a - b) <= 1e-12


def test_r_commutes_with_coupling_pair():
    co = derive_qsde(SYS1, M1, symbolic=False)
    for eps in (0, 1):
        dd = SYS1.d_eps(eps) @ SYS1.d_eps(1 - eps)
        for e in (1.7, 2.2, 4.9):
            r = co.r_map(eps, eps, float(e))
            assert np.linalg.norm(r @ dd - dd @ r) <= 1e-13


def test_fm_consistency_on_band():
    for e in (1.6, 2.0, 2.4, 4.6, 5.0, 5.5):
        assert fm_consistency(SYS1, M1, float(e)) <= 1e-10


def test_fm_consistency_scaling_invariance():
    scaled = SpectralModel(
        band0=GaussianBand(1.5, 2.0, 0.3, (1.0, 3.0)),
        band1=GaussianBand(1.5, 5.0, 0.3, (4.0, 6.0)),
        beta=1.0, omega0=1.0,
    )
    for e in (2.0, 5.0):
        assert fm_consistency(SYS1, scaled, float(e)) <= 1e-10


def test_fm_off_support_raises():
    with pytest.raises(DomainError):
        fm_consistency(SYS1, M1, 3.5)


def test_vacuum_positivity_symmetric_gram():
    """Gram matrix of smeared creators in the master-field mode, evaluated
    through the band densities, is positive semidefinite.

    The two-point scalars come out of the symbolic engine; the smeared
    instantiation pairs equal-time profiles (weight one) and integrates the
    energy delta against Gaussian windows.
    """
    from ldlkit.algebra import b_int, bd_int, commutator
    from ldlkit.algebra import scalars as sc

    windows = [GaussianBand(1.0, 1.6, 0.25, (1.0, 3.0)),
               GaussianBand(1.0, 2.0, 0.30, (1.0, 3.0)),
               GaussianBand(1.0, 2.4, 0.25, (1.0, 3.0))]
    labels = [(0, 0), (0, 1)]
    creators = [(lab, win) for lab in labels for win in windows]
    x, wts = np.polynomial.legendre.leggauss(400)
    xs = x + 2.0  # band zero support [1, 3]
    gram = np.zeros((len(creators), len(creators)), complex)
    for i, ((a1, b1), win1) in enumerate(creators):
        for j, ((a2, b2), win2) in enumerate(creators):
            comm = commutator(b_int(a1, b1, "E", "t"),
                              bd_int(a2, b2, "Ep", "tp"), "symmetric")
            if comm.is_zero:
                continue
            assert len(comm.terms) == 1
            term = comm.terms[0]
            dens = np.ones_like(xs)
            for atom in term.atoms:
                if atom.kind == sc.RHO:
                    dens = dens * M1.rho(atom.args[0], xs)
                elif atom.kind == sc.W:
                    dens = dens * weight_w(M1, atom.args[0], xs)
            gram[i, j] = term.coeff.to_complex() * np.sum(
                wts * win1(xs) * win2(xs) * dens)
    assert np.linalg.norm(gram - gram.conj().T) <= 1e-12
    assert np.linalg.eigvalsh(0.5 * (gram + gram.conj().T)).min() >= -1e-12
