"""The closed commutator table of the master-field algebra.

The three base relations are stated for doubly-indexed generators; every
other kind pair follows by antisymmetry and the adjoint involution.
Integrated generators are commuted by materializing fresh bound variables
for the integrated slots, applying the doubly-indexed table and contracting,
which reproduces the one-energy relations exactly.

In causal mode the kernels are the fused simplex atoms
delta_+(t'-t)/(i(E-E'-i0)); in symmetric (master-field) mode they are
delta(t'-t) * 2*pi*delta(E-E').
"""

from __future__ import annotations

from ..errors import UnevaluatedCommutatorError
from . import scalars as sc
from .expr import Expr, Term, fresh_energy, mul_terms
from .symbols import B_KIND, BD_KIND, N_KIND, Evolution, Generator

CAUSAL_MODE = "causal"
SYMMETRIC_MODE = "symmetric"


def _kernel(mode, t1, t2, x, y):
    """The fused time-energy kernel common to all three base relations."""
    if mode == CAUSAL_MODE:
        return [sc.simplex(t1, t2, x, y)]
    if mode == SYMMETRIC_MODE:
        return [sc.symker(t1, t2, x, y)]
    raise ValueError(f"unknown mode {mode!r}")


def _b_with_bdag(a: Generator, b: Generator, mode) -> list:
    """[B(E1,E2,t), Bd(E3,E4,t')]."""
    if a.eps != b.eps:
        return []
    e1, e2 = a.eps
    f1, f2 = a.slots
    f3, f4 = b.slots
    atoms = _kernel(mode, a.time, b.time, f1, f2) + [
        sc.delta(f1, f3),
        sc.delta(f2, f4),
        sc.rho(e1, f1),
        sc.w_atom(e2, f2),
    ]
    return [Term(sc.ONE, atoms=tuple(atoms))]


def _b_with_number(a: Generator, b: Generator, mode) -> list:
    """[B(E1,E2,t), N(E3,E4,t')]."""
    if a.eps[0] != b.eps[0]:
        return []
    f1, f2 = a.slots
    f3, f4 = b.slots
    atoms = _kernel(mode, a.time, b.time, f1, f2) + [
        sc.delta(f1, f3),
        sc.rho(a.eps[0], f1),
    ]
    out_gen = Generator(B_KIND, (b.eps[1], a.eps[1]), (f4, f2), b.time)
    return [Term(sc.ONE, atoms=tuple(atoms), word=(out_gen,))]


def _number_with_number(a: Generator, b: Generator, mode) -> list:
    """[N(E1,E2,t), N(E3,E4,t')]."""
    e1, e2 = a.eps
    e3, e4 = b.eps
    x1, x2 = a.slots
    x3, x4 = b.slots
    terms = []
    if e2 == e3:
        atoms = _kernel(mode, a.time, b.time, x3, x1) + [sc.delta(x2, x3), sc.rho(e2, x2)]
        gen = Generator(N_KIND, (e1, e4), (x1, x4), b.time)
        terms.append(Term(sc.ONE, atoms=tuple(atoms), word=(gen,)))
    if e1 == e4:
        atoms = _kernel(mode, a.time, b.time, x3, x1) + [sc.delta(x1, x4), sc.rho(e1, x1)]
        gen = Generator(N_KIND, (e3, e2), (x3, x2), a.time)
        terms.append(Term(sc.Coeff.of(-1), atoms=tuple(atoms), word=(gen,)))
    return terms


def _negate(terms):
    return [t.scaled(sc.Coeff.of(-1)) for t in terms]


def _adjoint_terms(terms):
    out = []
    for t in terms:
        out.append(Term(
            t.coeff.conj(),
            tuple(s.adjoint() for s in reversed(t.sys)),
            tuple(sc.adjoint_atom(a) for a in t.atoms),
            tuple(g.adjoint() for g in reversed(t.word)),
            t.bound_e,
            t.bound_t,
        ))
    return out


def _table_doubly(a: Generator, b: Generator, mode) -> list:
    ka, kb = a.kind, b.kind
    if ka == kb and ka in (B_KIND, BD_KIND):
        return []
    if (ka, kb) == (B_KIND, BD_KIND):
        return _b_with_bdag(a, b, mode)
    if (ka, kb) == (BD_KIND, B_KIND):
        return _negate(_b_with_bdag(b, a, mode))
    if (ka, kb) == (B_KIND, N_KIND):
        return _b_with_number(a, b, mode)
    if (ka, kb) == (N_KIND, B_KIND):
        return _negate(_b_with_number(b, a, mode))
    if (ka, kb) == (N_KIND, BD_KIND):
        # [N, Bd] = ([B, N'])^+ with B = b^+ and N' = a^+
        return _adjoint_terms(_b_with_number(b.adjoint(), a.adjoint(), mode))
    if (ka, kb) == (BD_KIND, N_KIND):
        return _negate(_adjoint_terms(_b_with_number(a.adjoint(), b.adjoint(), mode)))
    if (ka, kb) == (N_KIND, N_KIND):
        return _number_with_number(a, b, mode)
    raise AssertionError("unreachable kind pair")


def _materialize(g: Generator):
    """Fill integrated slots with fresh bound energy variables."""
    if not g.integrated:
        return g, frozenset()
    slots = []
    fresh = set()
    for s in g.slots:
        if s is None:
            v = fresh_energy()
            fresh.add(v)
            slots.append(v)
        else:
            slots.append(s)
    return Generator(g.kind, g.eps, tuple(slots), g.time), frozenset(fresh)


def commutator(a, b, mode: str = CAUSAL_MODE) -> Expr:
    """Commutator [a, b] in the given mode.

    Accepts Generators or Exprs; Expr arguments are expanded by the Leibniz
    rule.  Commuting two terms that both carry system operators is rejected:
    system symbols are opaque, so their mutual commutator is not available.
    """
    from .rewrite import contract_deltas  # breaks the module cycle

    if isinstance(a, Generator) and isinstance(b, Generator):
        a2, ba = _materialize(a)
        b2, bb = _materialize(b)
        raw = _table_doubly(a2, b2, mode)
        bound = ba | bb
        ex = Expr(tuple(
            Term(t.coeff, t.sys, t.atoms, t.word, t.bound_e | bound, t.bound_t)
            for t in raw
        ))
        if bound:
            ex = contract_deltas(ex)
        return ex
    ea = a if isinstance(a, Expr) else Expr.of(a)
    eb = b if isinstance(b, Expr) else Expr.of(b)
    out = Expr.zero()
    for ta in ea.terms:
        for tb in eb.terms:
            if ta.sys and tb.sys:
                raise UnevaluatedCommutatorError(
                    "commutator of two terms both carrying system operators"
                )
            shell = mul_terms(
                Term(ta.coeff, ta.sys, ta.atoms, (), ta.bound_e, ta.bound_t),
                Term(tb.coeff, tb.sys, tb.atoms, (), tb.bound_e, tb.bound_t),
            )
            out = out + _word_commutator(shell, ta.word, tb.word, mode)
    return out


def _word_commutator(shell: Term, wa: tuple, wb: tuple, mode) -> Expr:
    """[wa, wb] expanded by the Leibniz rule under a scalar shell."""
    bound_t = shell.bound_t
    out = Expr.zero()
    for i, ga in enumerate(wa):
        for j, gb in enumerate(wb):
            inner = _symbol_commutator(ga, gb, mode, bound_t)
            if inner.is_zero:
                continue
            prefix = wa[:i] + wb[:j]
            suffix = wb[j + 1:] + wa[i + 1:]
            for t in inner.terms:
                merged = mul_terms(shell, t)
                out = out + Expr((Term(
                    merged.coeff,
                    merged.sys,
                    merged.atoms,
                    prefix + merged.word + suffix,
                    merged.bound_e,
                    merged.bound_t,
                ),))
    return out


def _symbol_commutator(ga, gb, mode, bound_t) -> Expr:
    from .rewrite import is_earlier

    if isinstance(ga, Generator) and isinstance(gb, Generator):
        return commutator(ga, gb, mode)
    if isinstance(ga, Generator) and isinstance(gb, Evolution):
        if ga.kind == B_KIND and not gb.dag and is_earlier(gb.time, ga.time, bound_t):
            return Expr.zero()
        raise UnevaluatedCommutatorError(
            f"[{ga!r}, U({gb.time})] has no rewrite rule at these times"
        )
    if isinstance(gb, Generator) and isinstance(ga, Evolution):
        return -_symbol_commutator(gb, ga, mode, bound_t)
    raise UnevaluatedCommutatorError(f"no rule for [{ga!r}, {gb!r}]")
