"""One-particle scattering cross-check of the limit-equation coefficients.

The number-conserving interaction restricts to the one-particle sector,
where the dynamical route (Abel-averaged wave operator, T = V1 Omega) and
the spectral route (energy-resolved coefficient matrices assembled on the
grid) must agree on dominant matrix elements.

The propagator is a two-point Gauss Magnus integrator; each step is the
exponential of an anti-Hermitian low-rank generator, evaluated exactly on
its small invariant subspace, so unitarity holds to machine precision at
any step size and the step cost is linear in the grid size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, UnitarityError, ValidationError
from .spectral import SpectralModel, SystemModel, r_matrix

_SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True)
class GridSpace:
    """Energy-discretized one-particle space covering both bands."""

    energies: np.ndarray      # grid points E_k
    weights: np.ndarray       # cell widths dE_k
    band_of: np.ndarray       # 0/1 per point
    g_vectors: np.ndarray     # shape (2, n): sqrt(rho_eps(E_k) dE_k) per band
    omega0: float

    @staticmethod
    def build(model: SpectralModel, points_per_band: int) -> "GridSpace":
        energies, weights, bands = [], [], []
        for eps in (0, 1):
            a, b = model.support(eps)
            de = (b - a) / points_per_band
            mids = a + de * (np.arange(points_per_band) + 0.5)
            energies.append(mids)
            weights.append(np.full(points_per_band, de))
            bands.append(np.full(points_per_band, eps, dtype=int))
        energies = np.concatenate(energies)
        weights = np.concatenate(weights)
        bands = np.concatenate(bands)
        g = np.zeros((2, energies.size))
        for eps in (0, 1):
            mask = bands == eps
            g[eps, mask] = np.sqrt(model.rho(eps, energies[mask]) * weights[mask])
        return GridSpace(energies, weights, bands, g, model.omega0)

    @property
    def size(self):
        return int(self.energies.size)

    def h1_diagonal(self) -> np.ndarray:
        """One-particle energies E_k + omega0 on band zero."""
        return self.energies + self.omega0 * (self.band_of == 0)

    def g_vec(self, eps: int) -> np.ndarray:
        return self.g_vectors[eps]


def coupling_operator(grid: GridSpace, sys: SystemModel) -> np.ndarray:
    """V1 = sum_eps D_eps (x) |g_eps><g_{1-eps}| on the coupled space."""
    n = grid.size
    v = np.zeros((sys.dim * n, sys.dim * n), complex)
    for eps in (0, 1):
        dyad = np.outer(grid.g_vec(eps), grid.g_vec(1 - eps))
        v += np.kron(sys.d_eps(eps), dyad)
    return v


def _interaction_factors(grid: GridSpace, sys: SystemModel):
    """Low-rank factors of V(t): at each time V(t) = X(t) Y(t)^+ where the
    columns carry the coupling dyads rotated by the band phases."""
    svd = []
    for eps in (0, 1):
        u, s, vh = np.linalg.svd(sys.d_eps(eps))
        keep = s > s[0] * 1e-14 if s.size and s[0] > 0 else s > 0
        svd.append((u[:, keep] * np.sqrt(s[keep]),
                    (vh[keep, :].conj().T) * np.sqrt(s[keep])))

    def factors(t):
        phase = np.exp(1j * t * grid.energies)
        cols_x, cols_y = [], []
        for eps in (0, 1):
            a = phase * grid.g_vec(eps)
            b = phase * grid.g_vec(1 - eps)
            u_half, v_half = svd[eps]
            for j in range(u_half.shape[1]):
                cols_x.append(np.kron(u_half[:, j], a))
                cols_y.append(np.kron(v_half[:, j], b))
        return (np.array(cols_x).T if cols_x else np.zeros((sys.dim * grid.size, 0)),
                np.array(cols_y).T if cols_y else np.zeros((sys.dim * grid.size, 0)))

    return factors


def _magnus_step(factors, t, h):
    """Exponential of the fourth-order Magnus generator on one step,
    returned as (Q, small) with exp(Omega) = 1 + Q small Q^+."""
    c = 0.5 * h * _SQRT3 / 3.0
    t1 = t + 0.5 * h - c
    t2 = t + 0.5 * h + c
    x1, y1 = factors(t1)
    x2, y2 = factors(t2)
    cols = np.concatenate([x1, x2, y1, y2], axis=1)
    q, _ = np.linalg.qr(cols)
    # project the generator onto the invariant subspace
    a1 = (q.conj().T @ x1) @ (y1.conj().T @ q)
    a2 = (q.conj().T @ x2) @ (y2.conj().T @ q)
    omega = -0.5j * h * (a1 + a2) - (_SQRT3 / 12.0) * h * h * (a2 @ a1 - a1 @ a2)
    from scipy.linalg import expm

    small = expm(omega) - np.eye(omega.shape[0])
    return q, small


def evolve_one_particle(grid: GridSpace, sys: SystemModel, t_final: float,
                        dt: float, unitarity_tol: float = 1e-8,
                        collector=None) -> np.ndarray:
    """Interaction-picture one-particle propagator up to t_final.

    The optional collector(t, U) is invoked after every step (and once at
    t = 0) so Abel averages accumulate without storing the trajectory.
    """
    if dt == 0 or t_final * dt < 0:
        raise ValidationError("dt must advance toward t_final")
    n = sys.dim * grid.size
    u = np.eye(n, dtype=complex)
    factors = _interaction_factors(grid, sys)
    if collector is not None:
        collector(0.0, u)
    steps = int(round(abs(t_final / dt)))
    h = t_final / steps if steps else 0.0
    t = 0.0
    for _ in range(steps):
        q, small = _magnus_step(factors, t, h)
        u = u + q @ (small @ (q.conj().T @ u))
        t += h
        if collector is not None:
            collector(t, u)
    defect = np.linalg.norm(u.conj().T @ u - np.eye(n)) / max(abs(t_final), 1.0)
    if defect > unitarity_tol:
        raise UnitarityError(
            f"unitarity defect {defect:.2e} per unit time exceeds {unitarity_tol}"
        )
    return u


def moller_operator(grid: GridSpace, sys: SystemModel, t_max: float,
                    abel_eta: float, dt: float = 0.01, direction: int = +1,
                    check_eta_stability: bool = False,
                    stability_tol: float = 1e-2):
    """Abel-averaged wave operator.

    The average eta int_0^Tmax e^{-eta t} W(t) dt is accumulated over the
    trajectory of W(t) = U^(1)(t)^+, the intertwining direction of the wave
    operator; `direction` selects the t -> +inf or t -> -inf limit.
    """
    if abel_eta <= 0 or t_max <= 0:
        raise ValidationError("Abel average needs positive eta and horizon")
    n = sys.dim * grid.size
    acc = {"last_t": 0.0, "last_u": None, "sum": np.zeros((n, n), complex)}

    def collector(t, u):
        w = u.conj().T  # the intertwiner direction
        tau = abs(t)
        if acc["last_u"] is not None:
            # exact integral of the exponential weight over the segment,
            # trapezoid only on the slowly varying propagator
            seg = (np.exp(-abel_eta * acc["last_t"])
                   - np.exp(-abel_eta * tau)) / abel_eta
            acc["sum"] += 0.5 * seg * (acc["last_u"] + w)
        acc["last_t"] = tau
        acc["last_u"] = w

    evolve_one_particle(grid, sys, direction * t_max, direction * dt,
                        collector=collector)
    omega = abel_eta * acc["sum"]
    if not check_eta_stability:
        return omega
    diff = eta_stability(grid, sys, t_max, abel_eta, dt=dt,
                         direction=direction, omega=omega)
    if diff > stability_tol:
        raise ConvergenceError(
            f"Abel average not eta-stable (relative change {diff:.2e})",
            diagnostics={"eta": abel_eta, "eta_half": abel_eta * 0.5,
                         "rel_change": diff},
        )
    return omega


def eta_stability(grid: GridSpace, sys: SystemModel, t_max: float,
                  abel_eta: float, dt: float = 0.01, direction: int = -1,
                  omega: np.ndarray | None = None) -> float:
    """Relative change of the consumed scattering result (band elements of
    the coupling applied to the wave operator) between eta and eta/2."""
    if omega is None:
        omega = moller_operator(grid, sys, t_max, abel_eta, dt=dt,
                                direction=direction)
    finer = moller_operator(grid, sys, t_max * 2.0, abel_eta * 0.5, dt=dt,
                            direction=direction)
    v1 = coupling_operator(grid, sys)
    coarse = band_elements(grid, sys, v1 @ omega)
    fine = band_elements(grid, sys, v1 @ finer)
    return float(np.linalg.norm(coarse - fine) / max(np.linalg.norm(fine), 1e-30))


# the empirically resolved convention: the t -> -infinity Abel average of
# the intertwiner matches the spectral assembly after a global factor of -i
# (the cross-check routine re-derives and reports this; tests assert it)
DEFAULT_DIRECTION = -1
DEFAULT_ALIGNMENT = -1j

_PHASES = (1.0 + 0.0j, -1.0 + 0.0j, 1j, -1j)


def moller_plus(grid: GridSpace, sys: SystemModel, t_max: float,
                abel_eta: float, dt: float = 0.01, **kwargs):
    return moller_operator(grid, sys, t_max, abel_eta, dt=dt,
                           direction=DEFAULT_DIRECTION, **kwargs)


def t_operator_dynamic(grid: GridSpace, sys: SystemModel, t_max: float,
                       abel_eta: float, dt: float = 0.01,
                       direction: int = DEFAULT_DIRECTION) -> np.ndarray:
    omega = moller_operator(grid, sys, t_max, abel_eta, dt=dt,
                            direction=direction)
    return coupling_operator(grid, sys) @ omega


def t_operator_spectral(grid: GridSpace, sys: SystemModel,
                        model: SpectralModel) -> np.ndarray:
    """Energy-resolved assembly sum_k dE_k sum_{ee'} R_{ee'}(E_k) (x)
    |g_e><g_e'| P_k / dE_k, with the grid projector normalized as a density."""
    n = grid.size
    r_vals = np.zeros((2, 2, n, sys.dim, sys.dim), complex)
    for eps in (0, 1):
        for epsp in (0, 1):
            for k in range(n):
                r_vals[eps, epsp, k] = r_matrix(model, sys, eps, epsp,
                                                float(grid.energies[k]))
    t_tensor = np.zeros((sys.dim, n, sys.dim, n), complex)
    for eps in (0, 1):
        for epsp in (0, 1):
            t_tensor += np.einsum("jab,i,j->aibj", r_vals[eps, epsp],
                                  grid.g_vec(eps), grid.g_vec(epsp))
    return t_tensor.reshape(sys.dim * n, sys.dim * n)


def band_elements(grid: GridSpace, sys: SystemModel, t_matrix: np.ndarray):
    """Matrix elements <u_a (x) g_x | T | u_b (x) g_y> over system basis
    vectors and band vectors."""
    n = grid.size
    t_tensor = t_matrix.reshape(sys.dim, n, sys.dim, n)
    out = np.zeros((sys.dim, 2, sys.dim, 2), complex)
    for x in (0, 1):
        for y in (0, 1):
            out[:, x, :, y] = np.einsum(
                "i,aibj,j->ab", grid.g_vec(x).conj(), t_tensor, grid.g_vec(y))
    return out


def intertwining_residual(grid: GridSpace, sys: SystemModel,
                          omega: np.ndarray) -> float:
    """Defect of H_full Omega - Omega H_free, relative, in the frame whose
    free Hamiltonian generates the interaction phases (system level spacing
    absorbed into the band shift)."""
    h_free = np.kron(np.eye(sys.dim), np.diag(grid.energies.astype(complex)))
    h_full = h_free + coupling_operator(grid, sys)
    num = np.linalg.norm(h_full @ omega - omega @ h_free)
    return float(num / max(np.linalg.norm(h_full), 1e-30))


def cross_check(grid: GridSpace, sys: SystemModel, model: SpectralModel,
                t_max: float, abel_eta: float, dt: float = 0.01) -> dict:
    """Compare the dynamical and spectral routes to the scattering operator.

    Both time directions and the four unimodular alignments are scanned;
    the winning convention is reported, never silently assumed.  Dominant
    band elements must agree within the stated relative tolerance.
    """
    t_spec = t_operator_spectral(grid, sys, model)
    spec_el = band_elements(grid, sys, t_spec)
    best = None
    for direction in (+1, -1):
        t_dyn = t_operator_dynamic(grid, sys, t_max, abel_eta, dt=dt,
                                   direction=direction)
        dyn_el = band_elements(grid, sys, t_dyn)
        for phase in _PHASES:
            mis = np.linalg.norm(phase * dyn_el - spec_el)
            if best is None or mis < best["mismatch"]:
                best = {
                    "direction": direction,
                    "alignment": phase,
                    "mismatch": float(mis),
                    "t_dyn": phase * t_dyn,
                    "dyn_elements": phase * dyn_el,
                }
    scale = np.abs(spec_el).max()
    dominant = np.abs(spec_el) >= 0.1 * scale
    rel = np.abs(best["dyn_elements"] - spec_el)[dominant] / np.abs(spec_el)[dominant]
    return {
        "direction": best["direction"],
        "alignment": best["alignment"],
        "t_dyn": best["t_dyn"],
        "t_spec": t_spec,
        "dyn_elements": best["dyn_elements"],
        "spec_elements": spec_el,
        "dominant_rel_errors": rel,
        "max_dominant_rel_error": float(rel.max()),
    }
