"""Numeric evaluation of the spectral coefficients: gamma_eps, thermal
weights, the resummed collision matrices T_eps(E), the damping operator and
its decay semigroup, and the thermally weighted two-band inner product."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, interpolate, linalg


@lru_cache(maxsize=None)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def composite_gauss(a: float, b: float, panels: int, order: int = 64):
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    x0, w0 = _leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
    weights = (half[:, None] * w0[None, :]).ravel()
    return nodes, weights

from .errors import (
    DisjointSupportError,
    DomainError,
    QuadratureError,
    SingularCoefficientError,
    ValidationError,
)


@dataclass(frozen=True)
class GaussianBand:
    """Density amp * exp(-((E-center)/width)^2), hard-clipped to support."""

    amplitude: float
    center: float
    width: float
    support: tuple[float, float]

    def __post_init__(self):
        if self.width <= 0 or self.amplitude < 0:
            raise ValidationError("gaussian band needs width > 0 and amplitude >= 0")
        if self.support[0] >= self.support[1]:
            raise ValidationError("band support must be a nonempty interval")

    def __call__(self, energy):
        e = np.asarray(energy, dtype=float)
        val = self.amplitude * np.exp(-(((e - self.center) / self.width) ** 2))
        inside = (e >= self.support[0]) & (e <= self.support[1])
        return np.where(inside, val, 0.0)


@dataclass(frozen=True)
class TableBand:
    """Tabulated density with monotone cubic interpolation; the declared
    support is the table range, hard-clipped to zero outside."""

    energies: tuple
    values: tuple

    def __post_init__(self):
        e = np.asarray(self.energies, float)
        v = np.asarray(self.values, float)
        if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) <= 0):
            raise ValidationError("table energies must be strictly increasing")
        if np.any(v < 0):
            raise ValidationError("table density values must be nonnegative")
        object.__setattr__(self, "_interp", interpolate.PchipInterpolator(e, v))

    @property
    def support(self):
        return (self.energies[0], self.energies[-1])

    def __call__(self, energy):
        e = np.asarray(energy, dtype=float)
        lo, hi = self.support
        inside = (e >= lo) & (e <= hi)
        return np.where(inside, self._interp(np.clip(e, lo, hi)), 0.0)


THERMAL_H1 = "h1"
THERMAL_H1PRIME = "h1prime"


@dataclass(frozen=True)
class SpectralModel:
    """Energy densities of the two coupling bands plus thermal data.

    The bands must have disjoint supports; every coefficient of the limit
    equation depends on the form factors only through these densities.
    """

    band0: GaussianBand | TableBand
    band1: GaussianBand | TableBand
    beta: float
    omega0: float
    thermal_h: str = THERMAL_H1
    quad_rel_tol: float = 1e-8
    quad_points: int = 801

    def __post_init__(self):
        if self.beta <= 0:
            raise ValidationError("inverse temperature must be positive")
        if self.thermal_h not in (THERMAL_H1, THERMAL_H1PRIME):
            raise ValidationError(f"unknown thermal_h {self.thermal_h!r}")
        a0, b0 = self.band0.support
        a1, b1 = self.band1.support
        if not (b0 < a1 or b1 < a0):
            raise DisjointSupportError(
                f"band supports [{a0},{b0}] and [{a1},{b1}] overlap"
            )
        for band in (self.band0, self.band1):
            grid = np.linspace(*band.support, 512)
            if np.any(band(grid) < 0):
                raise ValidationError("densities must be nonnegative")

    def band(self, eps: int):
        return (self.band0, self.band1)[eps]

    def rho(self, eps: int, energy):
        return self.band(eps)(energy)

    def support(self, eps: int):
        return self.band(eps).support

    def thermal_shift(self, eps: int) -> float:
        """Exponent shift in w_eps: the one-particle energy entering
        L = exp(-beta H / 2) is E + omega0 on band 0 when H is the full
        one-particle Hamiltonian, and E itself in the shifted convention."""
        if self.thermal_h == THERMAL_H1:
            return self.omega0 if eps == 0 else 0.0
        return 0.0


@dataclass(frozen=True)
class SystemModel:
    """Finite-level system with coupling matrix D (D0 = D, D1 = D^+)."""

    dim: int
    d_matrix: np.ndarray
    levels: tuple | None = None  # optional (eps0, eps1) eigenvalue data

    def __post_init__(self):
        d = np.asarray(self.d_matrix, complex)
        if d.shape != (self.dim, self.dim):
            raise ValidationError("D must be dim x dim")
        if not np.all(np.isfinite(d)):
            raise ValidationError("D must be finite")
        object.__setattr__(self, "d_matrix", d)
        if self.levels is not None:
            # rotating-wave structure check: D must be |e0><e1| up to scale
            nz = np.argwhere(np.abs(d) > 1e-12 * max(1.0, np.abs(d).max()))
            if len(nz) != 1:
                raise ValidationError(
                    "with level data the coupling must be a single dyad |e0><e1|"
                )

    def d_eps(self, eps: int) -> np.ndarray:
        return self.d_matrix if eps == 0 else self.d_matrix.conj().T


def model_m1():
    """Desk-scale reference model: two Gaussian bands and a two-level dyad."""
    return SpectralModel(
        band0=GaussianBand(0.5, 2.0, 0.3, (1.0, 3.0)),
        band1=GaussianBand(0.5, 5.0, 0.3, (4.0, 6.0)),
        beta=1.0,
        omega0=1.0,
    )


def system_m1():
    d = np.zeros((2, 2), complex)
    d[0, 1] = 1.0
    return SystemModel(2, d, levels=(0.0, 1.0))


# -- scalar coefficients -----------------------------------------------------


def gamma_eps(model: SpectralModel, eps: int, energy: float) -> complex:
    """gamma_eps(E) = pi rho_eps(E) - i PV int rho_eps(E')/(E'-E) dE'.

    The real part is exact by construction; the principal value uses
    symmetric-interval subtraction around the pole (QUADPACK's Cauchy
    weight) and plain adaptive quadrature off support.
    """
    rho = model.band(eps)
    a, b = rho.support
    re = math.pi * float(rho(energy))
    tol = model.quad_rel_tol
    if energy in (a, b) and float(rho(energy)) > 0.0:
        raise QuadratureError(
            f"gamma_{eps} at the support edge E={energy} is log-divergent "
            "for a density with a truncation step; evaluate inside or "
            "outside the band"
        )
    if a < energy < b:
        val, err = integrate.quad(
            lambda x: float(rho(x)), a, b, weight="cauchy", wvar=energy,
            epsrel=tol, epsabs=1e-13, limit=200,
        )
    else:
        val, err = integrate.quad(
            lambda x: float(rho(x)) / (x - energy), a, b,
            epsrel=tol, epsabs=1e-13, limit=200,
            points=None,
        )
    if not math.isfinite(val) or err > max(tol * max(abs(val), 1.0), 1e-7):
        raise QuadratureError(
            f"principal-value quadrature did not converge at E={energy}: "
            f"value={val}, err={err}"
        )
    return complex(re, -val)


def gamma_eps_time_oracle(model, eps, energy, eta0=0.02, nodes=4096, levels=4):
    """Damped time-domain evaluation of gamma_eps with eta -> 0+ Richardson
    extrapolation.  Independent of the Sokhotski-Plemelj split: only the
    defining one-sided time integral is used, with the inner correlation
    integral done on a fixed Gauss-Legendre grid."""
    rho = model.band(eps)
    a, b = rho.support
    x, w = composite_gauss(a, b, panels=max(nodes // 64, 1))
    weights = w * rho(x)

    def damped(eta):
        # int_0^inf ds e^{-eta s} e^{i s (x_k - E)} summed over nodes
        return np.sum(weights / (eta - 1j * (energy - x))) * 1.0

    etas = [eta0 / 2**k for k in range(levels)]
    vals = [damped(e) for e in etas]
    # Richardson elimination of eta, eta^2, ... terms
    table = [list(vals)]
    for k in range(1, levels):
        prev = table[-1]
        nxt = []
        for i in range(len(prev) - 1):
            nxt.append((2**k * prev[i + 1] - prev[i]) / (2**k - 1))
        table.append(nxt)
    return table[-1][0]


def weight_w(model: SpectralModel, eps: int, energy: float) -> float:
    """Thermal weight w_eps(E) = exp(-beta (E + shift)) rho_eps(E)."""
    shift = model.thermal_shift(eps)
    e = np.asarray(energy, dtype=float)
    return np.exp(-model.beta * (e + shift)) * model.rho(eps, e)


def n_eps(model: SpectralModel, eps: int, energy: float) -> float:
    """Number-process intensity 1 / w_eps(E); defined on the band only."""
    w = weight_w(model, eps, energy)
    if np.ndim(w) == 0:
        if w <= 0.0:
            raise DomainError(f"n_eps undefined off support (E={energy})")
        return 1.0 / w
    if np.any(w <= 0.0):
        raise DomainError("n_eps undefined off support")
    return 1.0 / w


def t_eps_matrix(model, sys: SystemModel, eps: int, energy: float,
                 gamma_pair=None) -> np.ndarray:
    """T_eps(E) = (1 + gamma_eps gamma_{1-eps}(E) D_eps D_{1-eps})^{-1}."""
    if gamma_pair is None:
        g = gamma_eps(model, eps, energy) * gamma_eps(model, 1 - eps, energy)
    else:
        g = gamma_pair[eps] * gamma_pair[1 - eps]
    dd = sys.d_eps(eps) @ sys.d_eps(1 - eps)
    a = np.eye(sys.dim, dtype=complex) + g * dd
    try:
        t = np.linalg.solve(a, np.eye(sys.dim, dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise SingularCoefficientError(
            f"1 + gamma*gamma D_eps D_(1-eps) singular at E={energy}"
        ) from exc
    residual = np.linalg.norm(a @ t - np.eye(sys.dim))
    if residual > 1e-12 * max(1.0, np.linalg.norm(a)):
        raise SingularCoefficientError(
            f"ill-conditioned collision resummation at E={energy} "
            f"(residual {residual:.2e})"
        )
    return t


def r_matrix(model, sys, eps, eps2, energy, gamma_pair=None) -> np.ndarray:
    """QSDE coefficient matrices:
    R_{eps,eps}(E)   = -gamma_{1-eps}(E) D_eps D_{1-eps} T_eps(E)
    R_{eps,1-eps}(E) = -i T_eps(E) D_eps
    """
    t = t_eps_matrix(model, sys, eps, energy, gamma_pair=gamma_pair)
    if eps2 == eps:
        g1 = (gamma_eps(model, 1 - eps, energy) if gamma_pair is None
              else gamma_pair[1 - eps])
        return -g1 * (sys.d_eps(eps) @ sys.d_eps(1 - eps) @ t)
    return -1j * (t @ sys.d_eps(eps))


def _adaptive_matrix_simpson(f, a, b, rel_tol, max_depth=48):
    """Adaptive Simpson quadrature for matrix-valued integrands."""

    def simpson(fa, fm, fb, h):
        return (h / 6.0) * (fa + 4.0 * fm + fb)

    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = simpson(fa, fm, fb, b - a)
    scale = max(np.linalg.norm(whole), 1e-30)

    def rec(a, b, fa, fm, fb, whole, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        err = np.linalg.norm(left + right - whole)
        if err < rel_tol * scale * 15.0 or depth >= max_depth:
            if depth >= max_depth and err > rel_tol * scale * 15.0:
                raise QuadratureError("adaptive Simpson hit depth limit")
            return left + right + (left + right - whole) / 15.0
        return (rec(a, m, fa, flm, fm, left, depth + 1)
                + rec(m, b, fm, frm, fb, right, depth + 1))

    return rec(a, b, fa, fm, fb, whole, 0)


def gamma_matrix(model: SpectralModel, sys: SystemModel,
                 rel_tol: float | None = None) -> np.ndarray:
    """Damping operator
    Gamma = sum_eps int dE gamma_{1-eps}(E) D_eps D_{1-eps} T_eps(E) w_eps(E),
    integrated band by band (the thermal weight vanishes off band)."""
    tol = rel_tol if rel_tol is not None else model.quad_rel_tol
    total = np.zeros((sys.dim, sys.dim), complex)
    for eps in (0, 1):
        a, b = model.support(eps)
        # stay a hair inside the band: the edge points of a truncated
        # density carry a log-divergent gamma, and the skipped sliver is
        # 1e-9 of the band, far below the quadrature tolerance
        h = 1e-9 * (b - a)
        a, b = a + h, b - h
        dd = sys.d_eps(eps) @ sys.d_eps(1 - eps)

        def integrand(e, eps=eps, dd=dd):
            w = float(weight_w(model, eps, e))
            if w == 0.0:
                return np.zeros((sys.dim, sys.dim), complex)
            g_other = gamma_eps(model, 1 - eps, e)
            t = t_eps_matrix(model, sys, eps, e)
            return g_other * w * (dd @ t)

        total += _adaptive_matrix_simpson(integrand, a, b, tol)
    return total


def check_damping(gamma: np.ndarray) -> float:
    """Minimum eigenvalue of the Hermitian part (Gamma + Gamma^+)/2."""
    herm = 0.5 * (gamma + gamma.conj().T)
    return float(np.linalg.eigvalsh(herm)[0])


def decay_curve(gamma: np.ndarray, times) -> list[dict]:
    """Vacuum decay e^{-Gamma t} by scaling-and-squaring, with norms."""
    out = []
    for t in times:
        if t < 0:
            raise ValidationError("decay times must be nonnegative")
        u = linalg.expm(-gamma * float(t))
        out.append({"t": float(t), "matrix": u,
                    "norm": float(np.linalg.norm(u, 2))})
    return out


# -- the thermally weighted two-band inner product ---------------------------


def beta_inner(model: SpectralModel, a, b, c, d) -> complex:
    """Inner product (a (x) b | c (x) d) on the two-band pair space.

    Arguments are drawn from the finite family ("g", eps) for a full band
    vector and ("Pg", eps, E) for its energy localization.  The evaluation
    reduces to band densities:
        <g_x, P_F g_y>      = delta_{xy} rho_x(F)
        <g_d, P_F L^2 g_b>  = delta_{db} w_b(F)
    and one overall energy integral; a single localized insertion pins that
    integral, two insertions at distinct variables are density-valued and
    rejected.
    """

    def parse(arg):
        if arg[0] == "g":
            return arg[1], None
        if arg[0] == "Pg":
            return arg[1], float(arg[2])
        raise ValidationError(f"unsupported beta_inner argument {arg!r}")

    ea, la = parse(a)
    eb, lb = parse(b)
    ec, lc = parse(c)
    ed, ld = parse(d)
    if ea != ec or eb != ed:
        return 0.0 + 0.0j
    pins = {x for x in (la, lb, lc, ld) if x is not None}
    if len(pins) > 1:
        raise ValidationError(
            "beta_inner with two distinct localizations is density-valued"
        )
    if pins:
        e0 = pins.pop()
        val = model.rho(ea, e0) * weight_w(model, eb, e0)
        return complex(2.0 * math.pi * float(val))
    lo0, hi0 = model.support(ea)
    lo1, hi1 = model.support(eb)
    lo, hi = max(lo0, lo1), min(hi0, hi1)
    if lo >= hi:
        return 0.0 + 0.0j
    val, err = integrate.quad(
        lambda e: float(model.rho(ea, e) * weight_w(model, eb, e)),
        lo, hi, epsrel=model.quad_rel_tol, epsabs=1e-14, limit=200,
    )
    return complex(2.0 * math.pi * val)


# -- randomized valid models for property checks ------------------------------


def random_model(rng: np.random.Generator,
                 quad_rel_tol: float = 1e-8) -> SpectralModel:
    """Random Gaussian bumps on disjoint supports with random thermal data."""
    lo0 = rng.uniform(0.0, 2.0)
    w0 = rng.uniform(0.5, 2.0)
    gap = rng.uniform(0.3, 2.0)
    w1 = rng.uniform(0.5, 2.0)
    lo1 = lo0 + w0 + gap
    band0 = GaussianBand(
        amplitude=rng.uniform(0.1, 1.0),
        center=lo0 + w0 * rng.uniform(0.3, 0.7),
        width=w0 * rng.uniform(0.1, 0.4),
        support=(lo0, lo0 + w0),
    )
    band1 = GaussianBand(
        amplitude=rng.uniform(0.1, 1.0),
        center=lo1 + w1 * rng.uniform(0.3, 0.7),
        width=w1 * rng.uniform(0.1, 0.4),
        support=(lo1, lo1 + w1),
    )
    return SpectralModel(band0, band1, beta=rng.uniform(0.2, 2.0),
                         omega0=rng.uniform(0.0, 2.0),
                         quad_rel_tol=quad_rel_tol)


def random_system(rng: np.random.Generator, max_dim: int = 4) -> SystemModel:
    dim = int(rng.integers(2, max_dim + 1))
    d = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return SystemModel(dim, d)
