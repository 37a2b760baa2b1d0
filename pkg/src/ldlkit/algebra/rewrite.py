"""Rewrite operations: delta contraction, number-operator expansion,
normal ordering and vacuum expectation."""

from __future__ import annotations

from ..errors import IllFormedTermError
from . import scalars as sc
from .expr import Expr, Term, fresh_energy
from .symbols import B_KIND, BD_KIND, N_KIND, Evolution, Generator

_RANK = {BD_KIND: 0, N_KIND: 1, B_KIND: 2}


def is_earlier(s: str, t: str, bound_t) -> bool:
    """True when s is a bound time integrated up to t (transitively)."""
    uppers = dict(bound_t)
    seen = set()
    cur = s
    while cur in uppers and cur not in seen:
        seen.add(cur)
        cur = uppers[cur]
        if cur == t:
            return True
    return False


# -- delta contraction -------------------------------------------------------


def contract_deltas(expr: Expr, bound_e=(), bound_t=()) -> Expr:
    """Eliminate bound variables: energy deltas by sifting, the causal
    half-delta by the time-consecutive convention (weight one at the upper
    limit), and rho x causal pairs over a bound energy by the definition of
    gamma_eps.

    Extra bound variables can be supplied positionally; they are added to
    each term before contraction.
    """
    out = Expr.zero()
    for t in expr.terms:
        if bound_e or bound_t:
            t = Term(
                t.coeff, t.sys, t.atoms, t.word,
                t.bound_e | frozenset(bound_e),
                t.bound_t | frozenset(bound_t),
            )
        out = out + Expr((_contract_term(t),))
    return out


def _contract_term(term: Term) -> Term:
    changed = True
    while changed:
        changed = False
        term, did = _sift_energy(term)
        changed = changed or did
        term, did = _contract_time(term)
        changed = changed or did
        term, did = _produce_gamma(term)
        changed = changed or did
    return term


def _sift_energy(term: Term):
    """Sift one bound energy through one delta.  A bound variable shared by
    several deltas is integrated sequentially; a delta collapsing onto
    coincident arguments is rejected downstream by canonicalization."""
    for i, a in enumerate(term.atoms):
        if a.kind != sc.DELTA:
            continue
        x, y = a.args
        for v, other in ((x, y), (y, x)):
            if v not in term.bound_e or v == other:
                continue
            others = [b for j, b in enumerate(term.atoms) if j != i]
            rest = Term(
                term.coeff, term.sys, tuple(others), term.word,
                term.bound_e - {v}, term.bound_t,
            )
            return rest.rename({v: other}), True
    return term, False


def _contract_time(term: Term):
    uppers = dict(term.bound_t)
    for i, a in enumerate(term.atoms):
        if a.kind not in (sc.DPLUS, sc.SIMPLEX, sc.GPLUS):
            continue
        t1, t2 = a.args[0], a.args[1]
        for v, other in ((t1, t2), (t2, t1)):
            if uppers.get(v) != other:
                continue
            others = [b for j, b in enumerate(term.atoms) if j != i]
            if a.kind == sc.SIMPLEX:
                x, y = a.args[2], a.args[3]
                # earlier-time energy leg first: contraction over the second
                # time slot keeps the kernel orientation, over the first flips
                left = sc.causal(x, y) if v == t2 else sc.causal(y, x)
                others.append(left)
            elif a.kind == sc.GPLUS:
                eps, en, conj = a.args[2], a.args[3], a.args[4]
                others.append(sc.gamma_atom(eps, en, conj if v == t2 else not conj))
            rest = Term(
                term.coeff, term.sys, tuple(others), term.word,
                term.bound_e, term.bound_t - {(v, other)},
            )
            return rest.rename({v: other}), True
    return term, False


def _produce_gamma(term: Term):
    """rho_eps(v) integrated against a causal kernel in v is gamma_eps."""
    occurrences = {}
    for a in term.atoms:
        for v in a.variables():
            occurrences[v] = occurrences.get(v, 0) + 1
    word_vars = set()
    for g in term.word:
        word_vars.update(g.variables())
    for s in term.sys:
        word_vars.update(s.variables())

    for i, a in enumerate(term.atoms):
        if a.kind != sc.RHO:
            continue
        eps, v = a.args
        if v not in term.bound_e or occurrences.get(v, 0) != 2 or v in word_vars:
            continue
        for j, b in enumerate(term.atoms):
            if j == i:
                continue
            repl = None
            if b.kind == sc.CAUSAL:
                x, y = b.args
                if x == v and y != v:
                    repl = sc.gamma_atom(eps, y, False)
                elif y == v and x != v:
                    repl = sc.gamma_atom(eps, x, True)
            elif b.kind == sc.SIMPLEX:
                t1, t2, x, y = b.args
                if x == v and y != v:
                    repl = sc.gplus(t1, t2, eps, y, False)
                elif y == v and x != v:
                    repl = sc.gplus(t1, t2, eps, x, True)
            elif b.kind == sc.SYMKER:
                # rho against the 2*pi*delta leg sifts to 2*pi*rho
                t1, t2, x, y = b.args
                if x == v and y != v:
                    repl = ("symker", sc.dirac(t1, t2), sc.rho(eps, y))
                elif y == v and x != v:
                    repl = ("symker", sc.dirac(t1, t2), sc.rho(eps, x))
            if repl is None:
                continue
            if isinstance(repl, tuple) and repl[0] == "symker":
                others = [c for k, c in enumerate(term.atoms) if k not in (i, j)]
                others.extend(repl[1:])
                coeff = sc.Coeff(term.coeff.re, term.coeff.im, term.coeff.twopi + 1)
                return (
                    Term(coeff, term.sys, tuple(others), term.word,
                         term.bound_e - {v}, term.bound_t),
                    True,
                )
            others = [c for k, c in enumerate(term.atoms) if k not in (i, j)]
            others.append(repl)
            return (
                Term(term.coeff, term.sys, tuple(others), term.word,
                     term.bound_e - {v}, term.bound_t),
                True,
            )
    return term, False


# -- number-operator expansion ----------------------------------------------


def expand_number(expr: Expr) -> Expr:
    """Rewrite every number generator through creators and annihilators:

    N_{e1,e2}(E1, E2, t) = sum_{e'} int dE n_{e'}(E1)
        Bd_{e1,e'}(E, E1, t) B_{e2,e'}(E2, E1, t)
    """
    out = Expr.zero()
    for term in expr.terms:
        pieces = [Expr((Term(term.coeff, term.sys, term.atoms, (),
                             term.bound_e, term.bound_t),))]
        for g in term.word:
            if isinstance(g, Generator) and g.kind == N_KIND:
                pieces.append(_expand_one_n(g))
            else:
                pieces.append(Expr.of(g))
        acc = pieces[0]
        for p in pieces[1:]:
            acc = acc * p
        out = out + acc
    return out


def _expand_one_n(g: Generator) -> Expr:
    e1ref = g.slots[0] if g.slots[0] is not None else fresh_energy()
    e2ref = g.slots[1] if g.slots[1] is not None else fresh_energy()
    bound = {v for v, s in ((e1ref, g.slots[0]), (e2ref, g.slots[1])) if s is None}
    terms = []
    for ep in (0, 1):
        v = fresh_energy()
        bd = Generator(BD_KIND, (g.eps[0], ep), (v, e1ref), g.time)
        b = Generator(B_KIND, (g.eps[1], ep), (e2ref, e1ref), g.time)
        terms.append(
            Term(
                sc.ONE,
                atoms=(sc.ninv(ep, e1ref),),
                word=(bd, b),
                bound_e=frozenset(bound | {v}),
            )
        )
    return Expr(tuple(terms))


# -- normal ordering ----------------------------------------------------------


def normal_order(expr: Expr, mode: str = "causal", max_steps: int = 200_000) -> Expr:
    """Order every noise word as Bd* N* B* with the evolution symbol as a
    barrier; annihilators cross the barrier only by the time-consecutive
    rule.  Equal-kind runs of B (and Bd) are sorted, which is exact because
    they commute."""
    from .relations import commutator  # local import breaks the module cycle

    done = []
    work = list(expr.terms)
    steps = 0
    while work:
        steps += 1
        if steps > max_steps:
            raise RuntimeError("normal ordering did not terminate")
        term = work.pop()
        idx = _first_disorder(term)
        if idx is None:
            done.append(term)
            continue
        w = term.word
        x, y = w[idx], w[idx + 1]
        if isinstance(y, Evolution):
            # annihilator commuting rightward across the barrier
            swapped = Term(term.coeff, term.sys, term.atoms,
                           w[:idx] + (y, x) + w[idx + 2:],
                           term.bound_e, term.bound_t)
            work.append(swapped)
            continue
        swapped = Term(term.coeff, term.sys, term.atoms,
                       w[:idx] + (y, x) + w[idx + 2:],
                       term.bound_e, term.bound_t)
        work.append(swapped)
        corr = commutator(x, y, mode)
        if not corr.is_zero:
            for ct in corr.terms:
                from .expr import mul_terms

                shell = Term(term.coeff, term.sys, term.atoms, (),
                             term.bound_e, term.bound_t)
                merged = mul_terms(shell, ct)
                work.append(Term(
                    merged.coeff, merged.sys, merged.atoms,
                    w[:idx] + merged.word + w[idx + 2:],
                    merged.bound_e, merged.bound_t,
                ))
    return contract_deltas(Expr(tuple(done)))


def _gen_sort_key(g: Generator):
    return (g.eps, tuple(s or "" for s in g.slots), g.time)


def _first_disorder(term: Term):
    w = term.word
    for i in range(len(w) - 1):
        x, y = w[i], w[i + 1]
        if isinstance(x, Generator) and isinstance(y, Generator):
            rx, ry = _RANK[x.kind], _RANK[y.kind]
            if rx > ry:
                return i
            if rx == ry and rx != _RANK[N_KIND] and _gen_sort_key(y) < _gen_sort_key(x):
                # commuting equal-kind runs are sorted for canonicity
                return i
        elif isinstance(x, Generator) and isinstance(y, Evolution):
            if x.kind == B_KIND and not y.dag and is_earlier(y.time, x.time, term.bound_t):
                return i
    return None


def vacuum_expectation(expr: Expr, mode: str = "causal") -> Expr:
    """Normal-order and keep only generator-free terms (scalars, system
    words and the opaque evolution symbol survive)."""
    ordered = normal_order(expr, mode)
    kept = [t for t in ordered.terms
            if not any(isinstance(g, Generator) for g in t.word)]
    return Expr(tuple(kept))


def to_symmetric(expr: Expr) -> Expr:
    """Map a causal-mode expression to the symmetric (master-field) mode:
    dplus -> dirac, the causal kernel -> 2*pi*delta, gamma -> 2*pi*rho."""
    out = []
    for term in expr.terms:
        atoms = []
        tp = 0
        for a in term.atoms:
            repl, inc = sc.symmetric_mode_atoms(a)
            atoms.extend(repl)
            tp += inc
        coeff = sc.Coeff(term.coeff.re, term.coeff.im, term.coeff.twopi + tp)
        out.append(Term(coeff, term.sys, tuple(atoms), term.word,
                        term.bound_e, term.bound_t))
    return Expr(tuple(out))
