"""Numerical verification that the rescaled pre-limit kernels converge to
the limit distributions.

The fast phase exp(i (t'-t)(E1-E2)/lambda^2)/lambda^2 is removed
analytically by substituting u = (t'-t)/lambda^2, which turns every member
of the lambda sweep into the same smooth double integral; only the slow
test-function shift t' = t + lambda^2 u remembers lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, ValidationError
from .spectral import GaussianBand, SpectralModel

FULL = "full"
SIMPLEX = "simplex"


@dataclass(frozen=True)
class TimeProfile:
    """Gaussian time test function amp * exp(-((t-center)/width)^2)."""

    center: float
    width: float
    amplitude: float = 1.0

    def __post_init__(self):
        if self.width <= 0:
            raise ValidationError("time profile width must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.exp(-(((t - self.center) / self.width) ** 2))


@dataclass(frozen=True)
class TestFunctionPair:
    """Time profiles and energy windows smearing the two field operators."""

    __test__ = False  # not a pytest class, despite the name

    phi: TimeProfile
    psi: TimeProfile
    f: GaussianBand
    g: GaussianBand
    energy_weight_f: object = None  # optional extra density factor rho/w
    energy_weight_g: object = None

    def f_eff(self, e):
        val = self.f(e)
        if self.energy_weight_f is not None:
            val = val * self.energy_weight_f(e)
        return val

    def g_eff(self, e):
        val = self.g(e)
        if self.energy_weight_g is not None:
            val = val * self.energy_weight_g(e)
        return val


def _gl_nodes(a, b, n):
    from .spectral import composite_gauss

    return composite_gauss(a, b, panels=max(n // 64, 1))


def _kernel_transform(pair: TestFunctionPair, u_nodes, n_energy=800):
    """F(u) = int int f(E1) g(E2) exp(i u (E1 - E2)) dE1 dE2."""
    a1, b1 = pair.f.support
    a2, b2 = pair.g.support
    e1, w1 = _gl_nodes(a1, b1, n_energy)
    e2, w2 = _gl_nodes(a2, b2, n_energy)
    f_hat = (w1 * pair.f_eff(e1)) @ np.exp(1j * np.outer(e1, u_nodes))
    g_hat = (w2 * pair.g_eff(e2)) @ np.exp(-1j * np.outer(e2, u_nodes))
    return f_hat * g_hat


def _i_lambda(pair: TestFunctionPair, lam: float, mode: str,
              n_time=220, n_u=420, u_max=None) -> complex:
    """The rescaled double integral at one value of lambda."""
    if u_max is None:
        # the kernel transform decays on the scale of the inverse window
        # widths; narrow windows need a longer oscillation range
        widths = [getattr(win, "width", None) or
                  0.25 * (win.support[1] - win.support[0])
                  for win in (pair.f, pair.g)]
        u_max = max(48.0, 10.0 / max(min(widths), 1e-3))
        n_u = max(n_u, int(10 * u_max))
    tp = pair.phi
    lo = min(tp.center - 9 * tp.width, pair.psi.center - 9 * pair.psi.width)
    hi = max(tp.center + 9 * tp.width, pair.psi.center + 9 * pair.psi.width)
    t_nodes, t_w = _gl_nodes(lo, hi, n_time)
    if mode == FULL:
        u_nodes, u_w = _gl_nodes(-u_max, u_max, n_u)
        shift_sign = 1.0
    elif mode == SIMPLEX:
        # the standard simplex has the second time earlier: t' = t - l^2 u
        u_nodes, u_w = _gl_nodes(0.0, u_max, n_u)
        shift_sign = -1.0
    else:
        raise ValidationError(f"unknown mode {mode!r}")
    f_u = _kernel_transform(pair, shift_sign * u_nodes)
    shifted = pair.psi(t_nodes[:, None] + shift_sign * lam * lam * u_nodes[None, :])
    val = np.einsum("t,u,tu->", t_w * pair.phi(t_nodes), u_w * f_u, shifted)
    if not np.isfinite(val):
        raise ConvergenceError(
            f"oscillatory quadrature failed at lambda={lam}",
            diagnostics={"lambda": lam},
        )
    return complex(val)


def _limit_value(pair: TestFunctionPair, mode: str, n=800) -> complex:
    lo = min(pair.phi.center - 9 * pair.phi.width,
             pair.psi.center - 9 * pair.psi.width)
    hi = max(pair.phi.center + 9 * pair.phi.width,
             pair.psi.center + 9 * pair.psi.width)
    t_nodes, t_w = _gl_nodes(lo, hi, n)
    time_part = float(np.sum(t_w * pair.phi(t_nodes) * pair.psi(t_nodes)))
    a1, b1 = pair.f.support
    a2, b2 = pair.g.support
    if mode == FULL:
        lo_e, hi_e = max(a1, a2), min(b1, b2)
        if lo_e >= hi_e:
            return 0.0j
        e, w = _gl_nodes(lo_e, hi_e, n)
        return complex(2.0 * math.pi * time_part
                       * np.sum(w * pair.f_eff(e) * pair.g_eff(e)))
    # simplex mode: the half-kernel 1/(i (E1 - E2 - i0))
    if b1 <= a2 or b2 <= a1:
        # disjoint windows: no principal value needed
        e1, w1 = _gl_nodes(a1, b1, n)
        e2, w2 = _gl_nodes(a2, b2, n)
        kern = 1.0 / (1j * (e1[:, None] - e2[None, :]))
        val = np.einsum("i,j,ij->", w1 * pair.f_eff(e1), w2 * pair.g_eff(e2), kern)
        return complex(time_part * val)
    # overlapping windows: pi delta part plus a principal value in the
    # difference variable, through the correlation H(s)
    e, w = _gl_nodes(max(a1, a2), min(b1, b2), n)
    delta_part = math.pi * float(np.sum(w * pair.f_eff(e) * pair.g_eff(e)))
    span = (b1 - a2)
    lo_s, hi_s = -(b2 - a1), (b1 - a2)

    def corr(s):
        lo_e = max(a1, a2 + s)
        hi_e = min(b1, b2 + s)
        if lo_e >= hi_e:
            return 0.0
        ee, ww = _gl_nodes(lo_e, hi_e, 400)
        return float(np.sum(ww * pair.f_eff(ee) * pair.g_eff(ee - s)))

    pv, _ = integrate.quad(corr, lo_s, hi_s, weight="cauchy", wvar=0.0,
                           limit=200)
    return complex(time_part * (delta_part - 1j * pv))


def kernel_limit_check(pair: TestFunctionPair, lambdas, mode: str,
                       final_rel_tol: float = 5e-2) -> list[dict]:
    """Sweep the rescaled kernel integral over decreasing lambda and compare
    with the limit distribution.

    Errors must decrease along the sweep; one non-monotone step from
    oscillatory quadrature is tolerated and flagged in the row.
    """
    lams = list(lambdas)
    if any(l <= 0 for l in lams):
        raise ValidationError("lambdas must be positive")
    if sorted(lams, reverse=True) != lams:
        raise ValidationError("lambdas must be decreasing")
    limit = _limit_value(pair, mode)
    rows = []
    for lam in lams:
        val = _i_lambda(pair, lam, mode)
        rows.append({
            "lambda": lam,
            "value": val,
            "limit": limit,
            "abs_error": abs(val - limit),
            "flagged": False,
        })
    slack = 0
    for prev, cur in zip(rows, rows[1:]):
        if cur["abs_error"] > prev["abs_error"] * (1 + 1e-9):
            cur["flagged"] = True
            slack += 1
    if slack > 1:
        raise ConvergenceError(
            "kernel sweep not monotone",
            diagnostics={"errors": [r["abs_error"] for r in rows]},
        )
    scale = max(abs(limit), max(abs(r["value"]) for r in rows), 1e-30)
    rows[-1]["final_rel_error"] = rows[-1]["abs_error"] / scale
    rows[-1]["passed"] = rows[-1]["final_rel_error"] <= final_rel_tol
    return rows


def prelimit_two_point(model: SpectralModel, lam, labels: dict,
                       final_rel_tol: float = 5e-2) -> list[dict]:
    """Two-point correlator of the rescaled pair field against the causal
    scalar of the limit table.

    The order-one term of the pre-limit commutator is a closed-form kernel
    against rho_{eps1} and w_{eps2}; its time-ordered smearing is exactly
    the simplex sweep with effective energy windows, and the limit side is
    the smeared causal scalar.  Mismatched band labels give zero at every
    lambda.
    """
    eps_left = tuple(labels["eps_left"])
    eps_right = tuple(labels["eps_right"])
    f = labels["f"]
    g = labels["g"]
    phi = labels.get("phi", TimeProfile(0.0, 1.0))
    psi = labels.get("psi", TimeProfile(0.0, 1.0))
    lams = list(lam) if np.iterable(lam) else [float(lam)]
    if eps_left != eps_right:
        rows = []
        for l in lams:
            rows.append({"lambda": l, "value": 0.0j, "limit": 0.0j,
                         "abs_error": 0.0, "flagged": False})
        rows[-1]["final_rel_error"] = 0.0
        rows[-1]["passed"] = True
        return rows
    from .spectral import weight_w

    e1, e2 = eps_left
    pair = TestFunctionPair(
        phi=phi, psi=psi, f=f, g=g,
        energy_weight_f=lambda e: model.rho(e1, e),
        energy_weight_g=lambda e: weight_w(model, e2, e),
    )
    return kernel_limit_check(pair, lams, SIMPLEX, final_rel_tol=final_rel_tol)
