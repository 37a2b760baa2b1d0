"""Acceptance suite: every criterion at its stated tolerance, one printed
pass/fail line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines; the
heavier criteria (pre-limit sweep, scattering cross-check) dominate the
runtime.
"""

import numpy as np
import pytest

from ldlkit.algebra import (
    b_op,
    bd_op,
    commutator,
    n_op,
    to_symmetric,
)
from ldlkit.goldenrule import (
    Instantiation,
    fm_consistency,
    verify_resummation_identity,
    verify_drift_emergence,
    verify_number_emergence,
)
from ldlkit.prelimit import (
    FULL,
    SIMPLEX,
    TestFunctionPair,
    TimeProfile,
    kernel_limit_check,
    prelimit_two_point,
)
from ldlkit.scattering import (
    GridSpace,
    band_elements,
    cross_check,
    t_operator_dynamic,
    t_operator_spectral,
)
from ldlkit.spectral import (
    GaussianBand,
    check_damping,
    decay_curve,
    gamma_eps,
    gamma_eps_time_oracle,
    gamma_matrix,
    model_m1,
    random_model,
    random_system,
    system_m1,
)

M1 = model_m1()
SYS1 = system_m1()


def _report(number, name, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {number:2d} {name}: {status} {detail}")
    assert passed, f"criterion {number} ({name}) failed: {detail}"


def test_criterion_1_algebra_closure():
    rng = np.random.default_rng(101)
    ctors = (b_op, bd_op, n_op)
    failures = 0
    for k in range(200):
        a = ctors[int(rng.integers(3))](
            int(rng.integers(2)), int(rng.integers(2)), f"A{k}", f"B{k}", f"s{k}")
        b = ctors[int(rng.integers(3))](
            int(rng.integers(2)), int(rng.integers(2)), f"C{k}", f"D{k}", f"r{k}")
        for mode in ("causal", "symmetric"):
            if commutator(a, b, mode) != -commutator(b, a, mode):
                failures += 1
            if commutator(a, b, mode).adjoint() != commutator(
                    b.adjoint(), a.adjoint(), mode):
                failures += 1
        if to_symmetric(commutator(a, b, "causal")) != commutator(
                a, b, "symmetric"):
            failures += 1
    _report(1, "algebra closure and symmetry", failures == 0,
            f"failures={failures}/200 assignments")


def test_criterion_2_emergence_fixed_points():
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(100):
        inst = Instantiation.random(rng, int(rng.integers(2, 6)))
        worst = max(worst, verify_drift_emergence(None, inst=inst))
    for _ in range(100):
        inst = Instantiation.random(rng, int(rng.integers(2, 6)))
        worst = max(worst, verify_number_emergence(None, inst=inst))
    worst = max(worst, verify_drift_emergence(SYS1, model=M1, energy=2.0))
    worst = max(worst, verify_number_emergence(SYS1, model=M1, energy=2.0))
    _report(2, "emergence fixed-point residuals", worst <= 1e-12,
            f"worst={worst:.3e} (tol 1e-12)")


def test_criterion_3_resummation_identity():
    rng = np.random.default_rng(303)
    worst = 0.0
    for _ in range(100):
        dim = int(rng.integers(2, 6))
        d = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        g0 = complex(rng.uniform(0.1, 10), rng.uniform(-10, 10))
        g1 = complex(rng.uniform(0.1, 10), rng.uniform(-10, 10))
        from ldlkit.spectral import SystemModel

        worst = max(worst, verify_resummation_identity(SystemModel(dim, d), g0, g1))
    _report(3, "resummation identity residual", worst <= 1e-12,
            f"worst={worst:.3e} (tol 1e-12)")


def test_criterion_4_gamma_oracle():
    energies = np.concatenate([np.linspace(1.2, 2.8, 10),
                               np.linspace(4.2, 5.8, 10)])
    worst = 0.0
    for e in energies:
        for eps in (0, 1):
            sp = gamma_eps(M1, eps, float(e))
            td = gamma_eps_time_oracle(M1, eps, float(e))
            worst = max(worst, abs(sp - td) / max(abs(sp), 1e-12))
    _report(4, "gamma oracle equivalence", worst <= 1e-6,
            f"worst rel={worst:.3e} on 20-point grid (tol 1e-6)")


def test_criterion_5_damping_theorem():
    rng = np.random.default_rng(505)
    values = [check_damping(gamma_matrix(M1, SYS1))]
    for _ in range(50):
        model = random_model(rng, quad_rel_tol=1e-6)
        sys = random_system(rng, max_dim=4)
        values.append(check_damping(gamma_matrix(model, sys)))
    worst = min(values)
    _report(5, "damping nonnegativity", worst >= -1e-10,
            f"min eig={worst:.3e} over M1 + 50 random models (tol -1e-10)")


def test_criterion_6_vacuum_decay():
    gamma = gamma_matrix(M1, SYS1)
    times = list(np.linspace(0.0, 10.0, 11))
    curve = decay_curve(gamma, times)
    resid = 0.0
    for i in range(len(times)):
        for j in range(len(times)):
            prod = curve[i]["matrix"] @ curve[j]["matrix"]
            direct = decay_curve(gamma, [times[i] + times[j]])[0]["matrix"]
            resid = max(resid, float(np.linalg.norm(prod - direct)))
    offdiag = max(abs(gamma[0, 1]), abs(gamma[1, 0]))
    monotone = True
    for k in range(SYS1.dim):
        if gamma[k, k].real > 0:
            series = [abs(r["matrix"][k, k]) for r in curve]
            monotone = monotone and all(
                a > b for a, b in zip(series, series[1:]))
    ok = resid <= 1e-10 and offdiag <= 1e-14 and monotone
    _report(6, "vacuum decay semigroup", ok,
            f"semigroup resid={resid:.3e} (tol 1e-10), diagonal, monotone={monotone}")


def test_criterion_7_prelimit_convergence():
    lambdas = [1.0, 0.5, 0.25, 0.125]
    phi, psi = TimeProfile(0.0, 1.0), TimeProfile(0.3, 1.2)
    f = GaussianBand(1.0, 2.0, 0.35, (1.0, 3.0))
    g = GaussianBand(1.0, 5.0, 0.4, (4.0, 6.0))
    ok = True
    detail = []
    full = kernel_limit_check(TestFunctionPair(phi, psi, f, f), lambdas, FULL)
    simplex = kernel_limit_check(TestFunctionPair(phi, psi, f, g), lambdas,
                                 SIMPLEX)
    two = prelimit_two_point(
        M1, lambdas,
        dict(eps_left=(0, 1), eps_right=(0, 1), f=f, g=g, phi=phi, psi=psi))
    for name, rows in (("full", full), ("simplex", simplex), ("two_point", two)):
        errs = [r["abs_error"] for r in rows]
        unflagged_decreasing = sum(
            1 for a, b in zip(errs, errs[1:]) if b > a) <= 1
        ok = ok and unflagged_decreasing and rows[-1]["passed"]
        detail.append(f"{name}: final rel={rows[-1]['final_rel_error']:.3e}")
    _report(7, "pre-limit convergence", ok,
            "; ".join(detail) + " (tol 5e-2)")


def test_criterion_8_scattering_cross_check():
    res = cross_check(GridSpace.build(M1, 64), SYS1, M1,
                      t_max=400.0, abel_eta=0.05, dt=0.04)
    diffs = []
    prev_dyn = prev_spec = None
    for per_band in (8, 16, 32, 64):
        grid = GridSpace.build(M1, per_band)
        dyn_el = band_elements(grid, SYS1, -1j * t_operator_dynamic(
            grid, SYS1, t_max=240.0, abel_eta=0.05, dt=0.04, direction=-1))
        spec_el = band_elements(grid, SYS1, t_operator_spectral(grid, SYS1, M1))
        if prev_dyn is not None:
            diffs.append((float(np.linalg.norm(dyn_el - prev_dyn)),
                          float(np.linalg.norm(spec_el - prev_spec))))
        prev_dyn, prev_spec = dyn_el, spec_el
    dyn_cauchy = [d for d, _ in diffs]
    spec_cauchy = [s for _, s in diffs]
    decreasing = all(a > b for a, b in zip(dyn_cauchy, dyn_cauchy[1:])) and \
        all(a > b for a, b in zip(spec_cauchy, spec_cauchy[1:]))
    ok = res["max_dominant_rel_error"] <= 5e-2 and decreasing
    _report(8, "scattering cross-check", ok,
            f"dominant rel={res['max_dominant_rel_error']:.3e} (tol 5e-2), "
            f"direction={res['direction']:+d}, alignment={res['alignment']}, "
            f"cauchy dyn={['%.2e' % d for d in dyn_cauchy]}")


def test_criterion_9_single_operator_normalization():
    worst = 0.0
    for eps in (0, 1):
        a, b = M1.support(eps)
        for e in np.linspace(a + 0.1 * (b - a), b - 0.1 * (b - a), 10):
            worst = max(worst, fm_consistency(SYS1, M1, float(e)))
    _report(9, "single-operator normalization", worst <= 1e-10,
            f"worst residual={worst:.3e} over 10 energies/band (tol 1e-10)")


def test_criterion_10_determinism(tmp_path):
    from ldlkit.cli import main
    from ldlkit.config import M1_TOML

    config = tmp_path / "m1.toml"
    config.write_text(
        M1_TOML + "\n[run.check]\ntrials = 6\nrandom_models = 1\n"
        "prelimit_lambdas = [1.0, 0.5]\n")
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name
        rc = main(["check", "--config", str(config), "--out", str(out),
                   "--seed", "7", "--no-figures"])
        assert rc == 0
        outputs.append((out / "check.csv").read_bytes())
    _report(10, "determinism of the check command", outputs[0] == outputs[1],
            f"{len(outputs[0])} bytes, byte-identical={outputs[0] == outputs[1]}")
