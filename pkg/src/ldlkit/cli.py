"""Batch command-line front door.

One config file per run; outputs are CSV tables with a meta comment block,
plus rendered figures alongside them (disable with --no-figures).  Exit
codes: 0 success, 2 validation failure, 3 numerical-tolerance failure,
4 convergence failure.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import reporting
from .algebra import to_text
from .config import RunConfig
from .errors import (
    ConfigError,
    ConvergenceError,
    LdlError,
    QuadratureError,
    ToleranceError,
    ValidationError,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_TOLERANCE = 3
EXIT_CONVERGENCE = 4


def _map_maybe_parallel(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _cmd_gamma(cfg: RunConfig, out: Path, seed: int, figures: bool) -> int:
    model = cfg.model
    lo = model.support(0)[0]
    hi = model.support(1)[1]
    energies = cfg.grid("gamma", "energies",
                        np.linspace(lo + 1e-6, hi - 1e-6, 101))
    from .spectral import gamma_eps, weight_w

    def one(e):
        row = [float(e)]
        gs = []
        for eps in (0, 1):
            try:
                g = gamma_eps(model, eps, float(e))
            except QuadratureError:
                g = complex(float("nan"), float("nan"))
            gs.append(g)
            row.extend([g.real, g.imag])
        row.extend([float(weight_w(model, 0, float(e))),
                    float(weight_w(model, 1, float(e)))])
        return row, gs

    results = _map_maybe_parallel(one, energies, cfg.threads)
    rows = [r for r, _ in results]
    reporting.write_csv(
        out / "gamma.csv",
        ["E", "re_gamma0", "im_gamma0", "re_gamma1", "im_gamma1", "w0", "w1"],
        rows,
        reporting.standard_meta(cfg, seed, "gamma"),
    )
    if figures:
        g0 = np.array([g[0] for _, g in results])
        g1 = np.array([g[1] for _, g in results])
        arr = np.array(rows)
        reporting.figure_gamma(energies, g0, g1, arr[:, 5], arr[:, 6],
                               out / "gamma.png")
    return EXIT_OK


def _cmd_decay(cfg: RunConfig, out: Path, seed: int, figures: bool) -> int:
    from .spectral import check_damping, decay_curve, gamma_matrix

    gamma = gamma_matrix(cfg.model, cfg.system)
    times = cfg.grid("decay", "times", np.linspace(0.0, 10.0, 11))
    curve = decay_curve(gamma, times)
    dim = cfg.system.dim
    header = ["t", "norm"]
    for i in range(dim):
        for j in range(dim):
            header += [f"re_U_{i}{j}", f"im_U_{i}{j}"]
    rows = []
    for point in curve:
        row = [point["t"], point["norm"]]
        for i in range(dim):
            for j in range(dim):
                row += [point["matrix"][i, j].real, point["matrix"][i, j].imag]
        rows.append(row)
    meta = reporting.standard_meta(cfg, seed, "decay")
    meta["min_eig_herm_gamma"] = repr(check_damping(gamma))
    reporting.write_csv(out / "decay.csv", header, rows, meta)
    if figures:
        entries = {f"U_{i}{i}": np.array([p["matrix"][i, i] for p in curve])
                   for i in range(dim)}
        reporting.figure_decay([p["t"] for p in curve],
                               [p["norm"] for p in curve], entries,
                               out / "decay.png")
    return EXIT_OK


def _term_role(term) -> str:
    from .algebra.symbols import B_KIND, BD_KIND, Generator

    has_bd = any(isinstance(g, Generator) and g.kind == BD_KIND for g in term.word)
    has_b = any(isinstance(g, Generator) and g.kind == B_KIND for g in term.word)
    if has_bd and has_b:
        return "number"
    if has_bd:
        return "creation"
    if has_b:
        return "annihilation"
    return "drift"


def _cmd_derive(cfg: RunConfig, out: Path, seed: int, figures: bool) -> int:
    from .algebra.expr import term_text
    from .goldenrule import derive_qsde
    from .spectral import weight_w

    coeffs = derive_qsde(cfg.system, cfg.model, symbolic=True)
    lines = ["normally ordered evolution equation, energy integrand",
             "dU_t/dt = sum over the listed terms, integrated over E", ""]
    for term in coeffs.integrand.terms:
        lines.append(f"[{_term_role(term):12s}] {term_text(term)}")
    lines.append("")
    lines.append("serialized integrand:")
    lines.append(to_text(coeffs.integrand))
    reporting.atomic_write_text(out / "derive_transcript.txt", "\n".join(lines) + "\n")

    centers = []
    for eps in (0, 1):
        a, b = cfg.model.support(eps)
        centers.append(0.5 * (a + b))
    energies = cfg.grid("derive", "energies", centers)
    rows = []
    dim = cfg.system.dim
    for e in energies:
        for eps in (0, 1):
            for epsp in (0, 1):
                r = coeffs.r_map(eps, epsp, float(e))
                for i in range(dim):
                    for j in range(dim):
                        rows.append([float(e), eps, epsp, i, j,
                                     r[i, j].real, r[i, j].imag,
                                     float(weight_w(cfg.model, eps, float(e)))])
    meta = reporting.standard_meta(cfg, seed, "derive")
    drift = coeffs.drift()
    meta["drift_matrix"] = " ".join(
        f"{drift[i, j].real!r}{drift[i, j].imag:+}j"
        for i in range(dim) for j in range(dim))
    reporting.write_csv(
        out / "derive_coefficients.csv",
        ["E", "eps", "epsp", "i", "j", "re_R", "im_R", "w_eps"],
        rows, meta,
    )
    return EXIT_OK


def _default_prelimit_args(cfg: RunConfig):
    from .prelimit import TimeProfile
    from .spectral import GaussianBand

    a0, b0 = cfg.model.support(0)
    a1, b1 = cfg.model.support(1)
    f = GaussianBand(1.0, 0.5 * (a0 + b0), 0.2 * (b0 - a0), (a0, b0))
    g = GaussianBand(1.0, 0.5 * (a1 + b1), 0.25 * (b1 - a1), (a1, b1))
    phi = TimeProfile(0.0, 1.0)
    psi = TimeProfile(0.25, 1.2)
    return f, g, phi, psi


def _cmd_prelimit(cfg: RunConfig, out: Path, seed: int, figures: bool) -> int:
    from .prelimit import (
        FULL,
        SIMPLEX,
        TestFunctionPair,
        kernel_limit_check,
        prelimit_two_point,
    )

    lambdas = list(cfg.grid("prelimit", "lambdas", [1.0, 0.5, 0.25, 0.125]))
    f, g, phi, psi = _default_prelimit_args(cfg)
    sweeps = {}
    same = TestFunctionPair(phi, psi, f, f)
    cross = TestFunctionPair(phi, psi, f, g)
    sweeps["kernel_full"] = kernel_limit_check(same, lambdas, FULL)
    sweeps["kernel_simplex"] = kernel_limit_check(cross, lambdas, SIMPLEX)
    sweeps["two_point"] = prelimit_two_point(
        cfg.model, lambdas,
        dict(eps_left=(0, 1), eps_right=(0, 1), f=f, g=g, phi=phi, psi=psi),
    )
    worst = 0.0
    for name, rows in sweeps.items():
        csv_rows = [[r["lambda"], r["value"].real, r["value"].imag,
                     r["limit"].real, r["limit"].imag, r["abs_error"]]
                    for r in rows]
        reporting.write_csv(
            out / f"prelimit_{name}.csv",
            ["lambda", "value_re", "value_im", "limit_re", "limit_im",
             "abs_error"],
            csv_rows,
            reporting.standard_meta(cfg, seed, f"prelimit:{name}"),
        )
        worst = max(worst, rows[-1]["final_rel_error"])
        if not rows[-1]["passed"]:
            raise ToleranceError(
                f"prelimit sweep {name} final relative error "
                f"{rows[-1]['final_rel_error']:.3e} exceeds 5e-2"
            )
    if figures:
        reporting.figure_prelimit(sweeps, out / "prelimit.png")
    return EXIT_OK


def _cmd_scatter(cfg: RunConfig, out: Path, seed: int, figures: bool) -> int:
    from .scattering import GridSpace, cross_check

    points = int(cfg.value("scatter", "grid_points", 128))
    eta = float(cfg.value("scatter", "abel_eta", 0.05))
    tmax = float(cfg.value("scatter", "tmax_factor", 20.0)) / eta
    dt = float(cfg.value("scatter", "dt", 0.04))
    grid = GridSpace.build(cfg.model, points // 2)
    res = cross_check(grid, cfg.system, cfg.model, t_max=tmax, abel_eta=eta,
                      dt=dt)
    dim = cfg.system.dim
    rows = []
    for a in range(dim):
        for x in (0, 1):
            for b in range(dim):
                for y in (0, 1):
                    dv = res["dyn_elements"][a, x, b, y]
                    sv = res["spec_elements"][a, x, b, y]
                    denom = abs(sv)
                    rel = abs(dv - sv) / denom if denom > 0 else 0.0
                    rows.append([a, x, b, y, dv.real, dv.imag,
                                 sv.real, sv.imag, rel])
    meta = reporting.standard_meta(cfg, seed, "scatter")
    meta["direction"] = res["direction"]
    meta["alignment"] = str(res["alignment"])
    meta["max_dominant_rel_error"] = repr(res["max_dominant_rel_error"])
    reporting.write_csv(
        out / "scatter_elements.csv",
        ["i", "band_i", "j", "band_j", "re_dyn", "im_dyn", "re_spec",
         "im_spec", "rel_diff"],
        rows, meta,
    )
    if figures:
        reporting.figure_scatter(res["dyn_elements"], res["spec_elements"],
                                 out / "scatter.png")
    if res["max_dominant_rel_error"] > 0.05:
        raise ToleranceError(
            "scattering cross-check dominant elements differ by "
            f"{res['max_dominant_rel_error']:.3f} (> 5e-2)"
        )
    return EXIT_OK


def _cmd_check(cfg: RunConfig, out: Path, seed: int, figures: bool) -> int:
    results = run_check_suite(cfg, seed)
    rows = [[r["name"], r["value"], r["tolerance"], int(r["passed"])]
            for r in results]
    reporting.write_csv(out / "check.csv",
                        ["name", "value", "tolerance", "passed"], rows,
                        reporting.standard_meta(cfg, seed, "check"))
    if figures:
        reporting.figure_check(results, out / "check.png")
    width = max(len(r["name"]) for r in results)
    print(f"{'check'.ljust(width)}  {'value':>12}  {'tol':>9}  status")
    for r in results:
        print(f"{r['name'].ljust(width)}  {r['value']:>12.3e}  "
              f"{r['tolerance']:>9.1e}  {'pass' if r['passed'] else 'FAIL'}")
    if not all(r["passed"] for r in results):
        raise ToleranceError("one or more invariant checks failed")
    return EXIT_OK


def run_check_suite(cfg: RunConfig, seed: int) -> list[dict]:
    """The invariant suite: symbolic closure, theorem residuals, the gamma
    oracle, damping, the decay semigroup, drift consistency and the
    single-operator normalization, at desk scale."""
    from .algebra import b_op, bd_op, commutator, n_op, to_symmetric
    from .goldenrule import (
        Instantiation,
        derive_qsde,
        drift_from_equation,
        fm_consistency,
        verify_resummation_identity,
        verify_drift_emergence,
        verify_number_emergence,
    )
    from .spectral import (
        check_damping,
        decay_curve,
        gamma_eps,
        gamma_eps_time_oracle,
        gamma_matrix,
        random_model,
        random_system,
    )

    rng = np.random.default_rng(seed)
    model, system = cfg.model, cfg.system
    results = []

    def record(name, value, tolerance, larger_is_fail=True):
        passed = value <= tolerance if larger_is_fail else value >= tolerance
        results.append({"name": name, "value": float(value),
                        "tolerance": float(tolerance), "passed": bool(passed)})

    # symbolic closure on random label assignments
    trials = int(cfg.value("check", "trials", 40))
    kinds = (b_op, bd_op, n_op)
    bad = 0
    for k in range(trials):
        ctor_a = kinds[int(rng.integers(3))]
        ctor_b = kinds[int(rng.integers(3))]
        a = ctor_a(int(rng.integers(2)), int(rng.integers(2)),
                   f"A{k}", f"B{k}", f"s{k}")
        b = ctor_b(int(rng.integers(2)), int(rng.integers(2)),
                   f"C{k}", f"D{k}", f"r{k}")
        for mode in ("causal", "symmetric"):
            if commutator(a, b, mode) != -commutator(b, a, mode):
                bad += 1
            if commutator(a, b, mode).adjoint() != commutator(
                    b.adjoint(), a.adjoint(), mode):
                bad += 1
        if to_symmetric(commutator(a, b)) != commutator(a, b, "symmetric"):
            bad += 1
    record("algebra_closure_failures", bad, 0.5)

    worst = max(
        verify_resummation_identity(
            random_system(rng, 4),
            complex(rng.uniform(0.1, 10), rng.uniform(-10, 10)),
            complex(rng.uniform(0.1, 10), rng.uniform(-10, 10)))
        for _ in range(25)
    )
    record("resummation_identity_residual", worst, 1e-12)

    worst = max(verify_drift_emergence(None, inst=Instantiation.random(
        rng, int(rng.integers(2, 6)))) for _ in range(25))
    record("drift_emergence_residual", worst, 1e-12)
    worst = max(verify_number_emergence(None, inst=Instantiation.random(
        rng, int(rng.integers(2, 6)))) for _ in range(10))
    record("number_emergence_residual", worst, 1e-12)

    lo0, hi0 = model.support(0)
    lo1, hi1 = model.support(1)
    probe = list(np.linspace(lo0 + 0.1 * (hi0 - lo0), hi0 - 0.1 * (hi0 - lo0), 4))
    probe += list(np.linspace(lo1 + 0.1 * (hi1 - lo1), hi1 - 0.1 * (hi1 - lo1), 4))
    worst = 0.0
    for e in probe:
        for eps in (0, 1):
            sp = gamma_eps(model, eps, float(e))
            td = gamma_eps_time_oracle(model, eps, float(e))
            worst = max(worst, abs(sp - td) / max(abs(sp), 1e-12))
    record("gamma_oracle_rel", worst, 1e-6)

    gamma = gamma_matrix(model, system)
    record("damping_min_eig", -check_damping(gamma), 1e-10)
    n_models = int(cfg.value("check", "random_models", 5))

    def damping_one(k):
        local = np.random.default_rng(seed + 1000 + k)
        return check_damping(gamma_matrix(random_model(local, quad_rel_tol=1e-6),
                                          random_system(local)))

    vals = _map_maybe_parallel(damping_one, range(n_models), cfg.threads)
    record("damping_random_min_eig", -min(vals), 1e-10)

    times = [0.0, 0.7, 1.9, 3.4, 5.0]
    curve = decay_curve(gamma, times)
    resid = 0.0
    for i, ti in enumerate(times):
        for j, tj in enumerate(times):
            both = decay_curve(gamma, [ti + tj])[0]["matrix"]
            resid = max(resid, float(np.linalg.norm(
                curve[i]["matrix"] @ curve[j]["matrix"] - both)))
    record("decay_semigroup_residual", resid, 1e-10)

    coeffs = derive_qsde(system, model, symbolic=True)
    mid0 = 0.5 * (lo0 + hi0)
    mid1 = 0.5 * (lo1 + hi1)
    worst_fm = max(fm_consistency(system, model, e)
                   for e in (mid0, mid0 + 0.2, mid1, mid1 - 0.3))
    record("fm_normalization_residual", worst_fm, 1e-10)
    worst_drift = 0.0
    for e in (mid0, mid1):
        inst = Instantiation.from_model(model, system, float(e))
        worst_drift = max(worst_drift, float(np.linalg.norm(
            drift_from_equation(coeffs, inst) - coeffs.drift_integrand(float(e)))))
    record("drift_two_route_residual", worst_drift, 1e-12)

    lambdas = list(cfg.grid("check", "prelimit_lambdas", [1.0, 0.5, 0.25]))
    from .prelimit import SIMPLEX, TestFunctionPair, kernel_limit_check

    f, g, phi, psi = _default_prelimit_args(cfg)
    rows = kernel_limit_check(TestFunctionPair(phi, psi, f, g), lambdas, SIMPLEX)
    record("prelimit_quick_rel", rows[-1]["final_rel_error"], 5e-2)
    return results


_COMMANDS = {
    "gamma": _cmd_gamma,
    "decay": _cmd_decay,
    "derive": _cmd_derive,
    "prelimit": _cmd_prelimit,
    "scatter": _cmd_scatter,
    "check": _cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ldlkit",
        description="low-density-limit stochastic-calculus workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML run config")
        p.add_argument("--out", default="ldlkit-out", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (overrides config)")
        grp = p.add_mutually_exclusive_group()
        grp.add_argument("--figures", dest="figures", action="store_true",
                         default=True)
        grp.add_argument("--no-figures", dest="figures", action="store_false")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_file(args.config)
        if args.threads is not None:
            cfg.threads = args.threads
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, out, args.seed, args.figures)
    except (ConfigError, ValidationError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ToleranceError, QuadratureError) as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except LdlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
