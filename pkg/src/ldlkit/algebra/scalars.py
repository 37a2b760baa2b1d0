"""Exact scalar layer: coefficients and distribution/density atoms.

Coefficients are Gaussian rationals times an integer power of 2*pi, so every
algebraic operation on expressions is exact (equality with tolerance zero).

Atom kinds and their meaning (all arguments are variable names):

=========  =============================================================
delta      delta(x - y), symmetric
tpd        2*pi*delta(x - y), symmetric (the symmetric-mode kernel)
dirac      delta(t2 - t1) in time, symmetric
dplus      delta_+(t2 - t1), the causal half-delta, oriented
causal     1 / (i (x - y - i0)), oriented
simplex    fused dplus(t1,t2) * causal(x,y); one simplex-limit object with
           the exact identity (t1,t2,x,y) == (t2,t1,y,x)
gplus      fused dplus(t1,t2) * gamma_eps(E) (conjugation flag c), with the
           identity (t1,t2,e,E,c) == (t2,t1,e,E,not c)
rho        rho_eps(x) = <g_eps, P_x g_eps>, real
w          w_eps(x) = <g_eps, P_x L^2 g_eps>, real
ninv       n_eps(x) = 1 / w_eps(x), real
gamma      gamma_eps(x), complex, conjugation tracked by a flag
=========  =============================================================

The fused kinds exist because the causal half-delta and its kernel partner
are two renderings of a single simplex distribution; keeping them fused is
what makes antisymmetry and adjoint covariance exact at the symbolic level.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import pi


@dataclass(frozen=True)
class Coeff:
    re: Fraction
    im: Fraction
    twopi: int = 0  # power of (2*pi)

    @staticmethod
    def of(re=1, im=0, twopi=0) -> "Coeff":
        return Coeff(Fraction(re), Fraction(im), twopi)

    def __add__(self, other: "Coeff") -> "Coeff":
        if self.twopi != other.twopi:
            raise ValueError("cannot add coefficients with different 2pi powers")
        return Coeff(self.re + other.re, self.im + other.im, self.twopi)

    def __mul__(self, other: "Coeff") -> "Coeff":
        return Coeff(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
            self.twopi + other.twopi,
        )

    def __neg__(self) -> "Coeff":
        return Coeff(-self.re, -self.im, self.twopi)

    def conj(self) -> "Coeff":
        return Coeff(self.re, -self.im, self.twopi)

    @property
    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def to_complex(self) -> complex:
        return complex(float(self.re), float(self.im)) * (2.0 * pi) ** self.twopi

    def text(self) -> str:
        body = f"{self.re}{'+' if self.im >= 0 else ''}{self.im}i"
        if self.twopi:
            body += f"|2pi^{self.twopi}"
        return f"({body})"


ONE = Coeff.of(1)
MINUS_I = Coeff.of(0, -1)
I = Coeff.of(0, 1)

DELTA = "delta"
TPD = "tpd"
DIRAC = "dirac"
DPLUS = "dplus"
CAUSAL = "causal"
SIMPLEX = "simplex"
SYMKER = "symker"  # fused dirac(t1,t2) * 2*pi*delta(x,y), symmetric-mode kernel
GPLUS = "gplus"
RHO = "rho"
W = "w"
NINV = "ninv"
GAMMA = "gamma"

# atoms whose argument pair is a singular point of a distribution; two of
# these on the same unordered pair multiply outside the closed table
_SINGULAR_ENERGY = (DELTA, TPD, CAUSAL)
_SINGULAR_TIME = (DIRAC, DPLUS)


@dataclass(frozen=True, order=True)
class Atom:
    kind: str
    args: tuple

    def rename(self, mapping: dict[str, str]) -> "Atom":
        def m(v):
            return mapping.get(v, v) if isinstance(v, str) else v

        return Atom(self.kind, tuple(m(a) for a in self.args))

    def variables(self):
        for a in self.args:
            if isinstance(a, str):
                yield a


def delta(x, y) -> Atom:
    return Atom(DELTA, (x, y))


def tpd(x, y) -> Atom:
    return Atom(TPD, (x, y))


def dirac(t1, t2) -> Atom:
    return Atom(DIRAC, (t1, t2))


def dplus(t1, t2) -> Atom:
    """delta_+(t2 - t1)."""
    return Atom(DPLUS, (t1, t2))


def causal(x, y) -> Atom:
    """1 / (i (x - y - i0)); the conjugate kernel is causal(y, x)."""
    return Atom(CAUSAL, (x, y))


def simplex(t1, t2, x, y) -> Atom:
    return Atom(SIMPLEX, (t1, t2, x, y))


def symker(t1, t2, x, y) -> Atom:
    return Atom(SYMKER, (t1, t2, x, y))


def gplus(t1, t2, eps, energy, conj=False) -> Atom:
    return Atom(GPLUS, (t1, t2, eps, energy, conj))


def rho(eps, x) -> Atom:
    return Atom(RHO, (eps, x))


def w_atom(eps, x) -> Atom:
    return Atom(W, (eps, x))


def ninv(eps, x) -> Atom:
    return Atom(NINV, (eps, x))


def gamma_atom(eps, x, conj=False) -> Atom:
    return Atom(GAMMA, (eps, x, conj))


def adjoint_atom(atom: Atom) -> Atom:
    k, a = atom.kind, atom.args
    if k in (DELTA, TPD, DIRAC, RHO, W, NINV):
        return atom
    if k == DPLUS:
        return Atom(DPLUS, (a[1], a[0]))
    if k == CAUSAL:
        return Atom(CAUSAL, (a[1], a[0]))
    if k in (SIMPLEX, SYMKER):
        # conj flips the energy legs (equivalently the time legs)
        return Atom(k, (a[0], a[1], a[3], a[2]))
    if k == GPLUS:
        # conj of dplus(t2-t1)*gamma^c is dplus(t1-t2)*gamma^c
        return Atom(GPLUS, (a[1], a[0], a[2], a[3], a[4]))
    if k == GAMMA:
        return Atom(GAMMA, (a[0], a[1], not a[2]))
    raise ValueError(f"unknown atom kind {k!r}")


def normalize_atom(atom: Atom) -> Atom:
    """Canonical orientation: symmetric atoms sort their pair; fused atoms
    sort the time pair using their exact reorientation identity."""
    k, a = atom.kind, atom.args
    if k in (DELTA, TPD, DIRAC):
        return Atom(k, tuple(sorted(a)))
    if k in (SIMPLEX, SYMKER) and a[1] < a[0]:
        return Atom(k, (a[1], a[0], a[3], a[2]))
    if k == GPLUS and a[1] < a[0]:
        return Atom(GPLUS, (a[1], a[0], a[2], a[3], not a[4]))
    return atom


def symmetric_mode_atoms(atom: Atom) -> tuple[list[Atom], int]:
    """Map a causal-mode atom to its symmetric-mode counterpart.

    Returns replacement atoms and an increment of the 2pi power
    (gamma_eps(E) maps to 2*pi*rho_eps(E)).
    """
    k, a = atom.kind, atom.args
    if k == DPLUS:
        return [Atom(DIRAC, a)], 0
    if k == CAUSAL:
        return [Atom(TPD, a)], 0
    if k == SIMPLEX:
        return [Atom(SYMKER, a)], 0
    if k == GPLUS:
        return [Atom(DIRAC, (a[0], a[1])), Atom(RHO, (a[2], a[3]))], 1
    if k == GAMMA:
        return [Atom(RHO, (a[0], a[1]))], 1
    return [atom], 0


def singular_pairs(atom: Atom):
    """Unordered variable pairs at which this atom is singular."""
    k, a = atom.kind, atom.args
    if k in _SINGULAR_ENERGY:
        yield frozenset((a[0], a[1]))
    elif k in _SINGULAR_TIME:
        yield frozenset((a[0], a[1]))
    elif k in (SIMPLEX, SYMKER):
        yield frozenset((a[0], a[1]))
        yield frozenset((a[2], a[3]))
    elif k == GPLUS:
        yield frozenset((a[0], a[1]))


def atom_text(atom: Atom) -> str:
    k, a = atom.kind, atom.args
    if k == SIMPLEX:
        return f"dplus*causal({a[0]},{a[1]};{a[2]},{a[3]})"
    if k == SYMKER:
        return f"dirac*2pid({a[0]},{a[1]};{a[2]},{a[3]})"
    if k == GPLUS:
        star = "~" if a[4] else ""
        return f"dplus*gamma{star}({a[0]},{a[1]};{a[2]},{a[3]})"
    if k == GAMMA:
        star = "~" if a[2] else ""
        return f"gamma{star}({a[0]},{a[1]})"
    return f"{k}({','.join(str(x) for x in a)})"
