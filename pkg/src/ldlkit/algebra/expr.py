"""Terms and expressions of the master-field algebra.

A term is (exact coefficient) x (system-operator word) x (scalar atoms) x
(noise word), together with the sets of bound (integrated) energy and time
variables.  Expressions are finite sums of terms, closed under addition,
multiplication, adjoint and commutator, with decidable equality after
canonicalization.

Canonicalization performs, in order: 2*pi*delta absorption into the
coefficient, delta-class representative rewriting, zero detection from
disjoint band supports, n*w cancellation, the hard-error check for kernel
products outside the closed table, fused-atom reorientation, integrated-slot
normalization and canonical renaming of bound variables.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction

from ..errors import IllFormedTermError, KernelProductError
from . import scalars as sc
from .scalars import Atom, Coeff
from .symbols import CommMarker, Evolution, Generator, SysOp

_fresh = itertools.count()


def fresh_energy() -> str:
    return f"_b{next(_fresh)}"


def fresh_time() -> str:
    return f"_u{next(_fresh)}"


@dataclass(frozen=True)
class Term:
    coeff: Coeff
    sys: tuple = ()
    atoms: tuple = ()
    word: tuple = ()
    bound_e: frozenset = frozenset()
    bound_t: frozenset = frozenset()  # pairs (var, upper_limit)

    def variables(self):
        for s in self.sys:
            yield from s.variables()
        for a in self.atoms:
            yield from a.variables()
        for g in self.word:
            yield from g.variables()
        for v, up in self.bound_t:
            yield v
            yield up

    def rename(self, mapping: dict[str, str]) -> "Term":
        return Term(
            self.coeff,
            tuple(s.rename(mapping) for s in self.sys),
            tuple(a.rename(mapping) for a in self.atoms),
            tuple(g.rename(mapping) for g in self.word),
            frozenset(mapping.get(v, v) for v in self.bound_e),
            frozenset((mapping.get(v, v), mapping.get(u, u)) for v, u in self.bound_t),
        )

    def scaled(self, c: Coeff) -> "Term":
        return Term(c * self.coeff, self.sys, self.atoms, self.word, self.bound_e, self.bound_t)


def _union_find(pairs):
    parent = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    classes = {}
    for x in list(parent):
        classes.setdefault(find(x), set()).add(x)
    return list(classes.values())


def canonical_term(term: Term) -> Term | None:
    """Bring one term to canonical form; None means the term is zero."""
    coeff = term.coeff
    atoms = list(term.atoms)
    word = tuple(term.word)
    sys = tuple(term.sys)
    bound_e = set(term.bound_e)
    bound_t = term.bound_t

    for _ in range(100):
        changed = False

        # 2*pi*delta is delta times one power of 2*pi
        out = []
        for a in atoms:
            if a.kind == sc.TPD:
                coeff = Coeff(coeff.re, coeff.im, coeff.twopi + 1)
                out.append(Atom(sc.DELTA, a.args))
                changed = True
            else:
                out.append(a)
        atoms = out

        _validate_atom_args(atoms)

        # delta-induced equality classes of free energy variables; deltas
        # that reference a bound variable are pending integrals, left intact
        free_deltas = [a for a in atoms
                       if a.kind == sc.DELTA and not (set(a.args) & bound_e)]
        rest = [a for a in atoms
                if not (a.kind == sc.DELTA and not (set(a.args) & bound_e))]
        classes = _union_find([a.args for a in free_deltas])
        if len(free_deltas) > sum(len(c) - 1 for c in classes):
            raise KernelProductError("repeated energy delta on the same variable pair")
        rep_map = {}
        for cls in classes:
            rep = min(cls)
            for v in cls:
                if v != rep:
                    rep_map[v] = rep
        rebuilt = []
        for cls in classes:
            ordered = sorted(cls)
            for a, b in zip(ordered, ordered[1:]):
                rebuilt.append(Atom(sc.DELTA, (a, b)))
        new_rest = [a.rename(rep_map) for a in rest]
        changed = changed or new_rest != rest or sorted(map(sc.atom_text, rebuilt)) != sorted(
            sc.atom_text(a) for a in free_deltas)
        atoms = rebuilt + new_rest
        word = tuple(g.rename(rep_map) for g in word)
        sys = tuple(s.rename(rep_map) for s in sys)

        # dirac time chains, canonicalized the same way
        dirac_atoms = [a for a in atoms if a.kind == sc.DIRAC]
        if dirac_atoms:
            others = [a for a in atoms if a.kind != sc.DIRAC]
            tclasses = _union_find([a.args for a in dirac_atoms])
            if len(dirac_atoms) > sum(len(c) - 1 for c in tclasses):
                raise KernelProductError("repeated time delta on the same variable pair")
            tre = []
            for cls in tclasses:
                ordered = sorted(cls)
                for a, b in zip(ordered, ordered[1:]):
                    tre.append(Atom(sc.DIRAC, (a, b)))
            atoms = tre + others

        # disjoint supports: density atoms on one energy at both bands
        bands_at = {}
        for a in atoms:
            if a.kind in (sc.RHO, sc.W, sc.NINV):
                bands_at.setdefault(a.args[1], set()).add(a.args[0])
        if any(len(bands) > 1 for bands in bands_at.values()):
            return None

        # n_eps(E) * w_eps(E) = 1
        while True:
            cancel = None
            for i, a in enumerate(atoms):
                if a.kind != sc.NINV:
                    continue
                for j, b in enumerate(atoms):
                    if b.kind == sc.W and b.args == a.args:
                        cancel = (i, j)
                        break
                if cancel:
                    break
            if not cancel:
                break
            i, j = cancel
            atoms = [a for k, a in enumerate(atoms) if k not in (i, j)]
            changed = True

        atoms = [sc.normalize_atom(a) for a in atoms]

        # integrated-slot normalization: a bound energy appearing only in
        # one generator slot is the integrated form of that generator
        def occurrences(v):
            n = 0
            for a in atoms:
                n += sum(1 for x in a.variables() if x == v)
            for s in sys:
                n += sum(1 for x in s.variables() if x == v)
            for g in word:
                n += sum(1 for x in g.variables() if x == v)
            return n

        new_word = []
        for g in word:
            if isinstance(g, Generator):
                slots = list(g.slots)
                for i, v in enumerate(slots):
                    if v is not None and v in bound_e and occurrences(v) == 1:
                        slots[i] = None
                        bound_e.discard(v)
                        changed = True
                g = Generator(g.kind, g.eps, tuple(slots), g.time)
            new_word.append(g)
        word = tuple(new_word)

        atoms, did = _refactor_kernel_webs(atoms, bound_e, bound_t)
        changed = changed or did

        atoms2, word2, bound_e2 = _align_kernel_times(atoms, word, bound_e, bound_t)
        changed = changed or word2 != word or atoms2 != atoms or bound_e2 != bound_e
        atoms, word, bound_e = atoms2, word2, set(bound_e2)

        atoms, extra_twopi, did = _degrade_scalar_symkers(atoms, word)
        if did:
            coeff = Coeff(coeff.re, coeff.im, coeff.twopi + extra_twopi)
            changed = True

        if not changed:
            break
    else:
        raise RuntimeError("canonicalization did not reach a fixpoint")

    _validate_atom_args(atoms)

    # products of singular kernels outside the closed table are hard errors
    seen = {}
    for a in atoms:
        for pair in sc.singular_pairs(a):
            seen[pair] = seen.get(pair, 0) + 1
    for pair, count in seen.items():
        if count > 1:
            raise KernelProductError(
                f"kernel product on pair {tuple(sorted(pair))} outside the closed table"
            )

    # canonical names for the remaining bound variables
    bound_t_vars = {v for v, _ in bound_t}
    ordered = []

    def note(v):
        if (v in bound_e or v in bound_t_vars) and v not in ordered:
            ordered.append(v)

    for g in word:
        for v in g.variables():
            note(v)
    masked = sorted(atoms, key=lambda a: _masked_key(a, bound_e | bound_t_vars))
    for a in masked:
        for v in a.variables():
            note(v)
    for v, up in sorted(bound_t):
        note(v)
        note(up)
    unresolved = [v for v in (bound_e | bound_t_vars) if v not in ordered]
    if unresolved:
        ordered.extend(sorted(unresolved))

    mapping = {}
    ne = ns = 0
    for v in ordered:
        if v in bound_e:
            mapping[v] = f".e{ne}"
            ne += 1
        else:
            mapping[v] = f".s{ns}"
            ns += 1

    final = Term(
        coeff,
        sys,
        tuple(sorted((a.rename(mapping) for a in atoms))),
        tuple(g.rename(mapping) for g in word),
        frozenset(mapping.get(v, v) for v in bound_e),
        frozenset((mapping.get(v, v), mapping.get(u, u)) for v, u in bound_t),
    )
    if final.coeff.is_zero:
        return None
    return final


def _masked_key(atom, bound):
    args = tuple("?" if isinstance(a, str) and a in bound else a for a in atom.args)
    return (atom.kind, args)


def _validate_atom_args(atoms):
    for a in atoms:
        if a.kind in (sc.DELTA, sc.DIRAC, sc.DPLUS, sc.CAUSAL) and a.args[0] == a.args[1]:
            raise IllFormedTermError(
                f"atom {sc.atom_text(a)} evaluated at coincident arguments")
        if a.kind in (sc.SIMPLEX, sc.SYMKER, sc.GPLUS) and a.args[0] == a.args[1]:
            raise IllFormedTermError(f"atom {sc.atom_text(a)} at coincident times")
        if a.kind in (sc.SIMPLEX, sc.SYMKER) and a.args[2] == a.args[3]:
            raise IllFormedTermError(f"atom {sc.atom_text(a)} at coincident energies")


def _refactor_kernel_webs(atoms, bound_e, bound_t):
    """Canonicalize products of fused kernels sharing legs.

    A product of simplex kernels is determined exactly by the integer
    bilinear form of its pre-limit phase, exponent sum (b-a)(p-q); different
    pairings of the same form are the same object.  The form is refactored
    greedily (smallest time row, smallest energies, smallest partner time),
    which gives a unique factorization.  Kernels touching bound variables
    are pending integrals and stay untouched.
    """
    bound = set(bound_e) | {v for v, _ in bound_t} | {u for _, u in bound_t}
    out = []
    changed = False
    for kind in (sc.SIMPLEX, sc.SYMKER):
        web = [a for a in atoms
               if a.kind == kind and not (set(a.args) & bound)]
        if len(web) < 2:
            continue
        form = {}
        for a in web:
            t1, t2, p, q = a.args
            for key, inc in (((t2, p), 1), ((t2, q), -1), ((t1, p), -1), ((t1, q), 1)):
                form[key] = form.get(key, 0) + inc
                if form[key] == 0:
                    del form[key]
        factors = []
        for _ in range(4 * len(web) + 4):
            if not form:
                break
            times = sorted({t for t, _ in form})
            t1 = times[0]
            row = sorted((e, c) for (t, e), c in form.items() if t == t1)
            e1, c1 = row[0]
            e2 = next(e for e, c in row if (c > 0) != (c1 > 0))
            col = sorted((t, c) for (t, e), c in form.items()
                         if e == e1 and t != t1 and (c > 0) != (c1 > 0))
            t2 = col[0][0]
            p, q = (e1, e2) if c1 < 0 else (e2, e1)
            factors.append(sc.normalize_atom(Atom(kind, (t1, t2, p, q))))
            for key, inc in (((t2, p), 1), ((t2, q), -1), ((t1, p), -1), ((t1, q), 1)):
                form[key] = form.get(key, 0) - inc
                if form[key] == 0:
                    del form[key]
        else:
            raise KernelProductError("kernel web did not refactor")
        if sorted(factors) != sorted(web):
            changed = True
            remaining = [a for a in atoms
                         if not (a.kind == kind and not (set(a.args) & bound))]
            atoms = remaining + factors
    return atoms, changed


def _align_kernel_times(atoms, word, bound_e=frozenset(), bound_t=frozenset()):
    """Move doubly-indexed generators from the second time of a fused kernel
    to its first, absorbing the generator's free-evolution phase into the
    kernel legs.  Exact by the pre-limit phase algebra; it applies only when
    the kernel and the generator share an adjacent leg, which is how every
    closed-table output is built.

    Two complementary rules keep a unique fixpoint without touching pending
    time integrals (the time-consecutive contraction keeps its convention):

    * forward: a fully free doubly-indexed generator at the kernel's second
      time moves to the first time;
    * reverse: a generator at the kernel's first time whose slot shares a
      bound variable with a kernel leg moves to the second time, freeing the
      bound variable so the integrated form can be recognized.
    """
    from .symbols import B_KIND, Generator as Gen

    bound_e = set(bound_e)
    bound_times = {v for v, _ in bound_t} | {u for _, u in bound_t}
    changed = True
    while changed:
        changed = False
        kernels = {}
        for i, a in enumerate(atoms):
            if a.kind in (sc.SIMPLEX, sc.SYMKER):
                for pos in (0, 1):
                    kernels.setdefault(a.args[pos], []).append(i)
        blocked = {a.args[1] for a in atoms if a.kind == sc.GPLUS}
        blocked |= {a.args[0] for a in atoms if a.kind == sc.GPLUS}
        blocked |= bound_times
        for wi, g in enumerate(word):
            if not isinstance(g, Gen) or g.integrated or g.time in blocked:
                continue
            cands = kernels.get(g.time, [])
            if len(cands) != 1:
                continue
            ai = cands[0]
            t1, t2, p, q = atoms[ai].args
            if t1 in bound_times or t2 in bound_times:
                continue
            x, y = g.slots
            touched = ({x, y} | {p, q}) & bound_e
            legs = consumed = None
            if g.time == t2:
                # forward: absorb e^{i(t2-t1) phase} moving g to t1
                if g.kind == B_KIND:
                    legs, consumed = ((p, x), q) if q == y else (((y, q), p) if p == x else (None, None))
                else:
                    legs, consumed = ((p, y), q) if q == x else (((x, q), p) if p == y else (None, None))
                target = t1
            else:
                # reverse: only to free a bound variable shared with a leg
                if g.kind == B_KIND:
                    legs, consumed = ((p, y), q) if q == x else (((x, q), p) if p == y else (None, None))
                else:
                    legs, consumed = ((p, x), q) if q == y else (((y, q), p) if p == x else (None, None))
                target = t2
            if legs is None:
                continue
            disentangles = consumed in bound_e
            if g.time == t1 and not disentangles:
                continue  # reverse moves exist only to free a bound variable
            if touched and not disentangles:
                continue  # forward moves stay clear of pending integrals
            new_atoms = list(atoms)
            new_atoms[ai] = sc.normalize_atom(Atom(atoms[ai].kind, (t1, t2) + legs))
            new_word = list(word)
            new_word[wi] = Gen(g.kind, g.eps, g.slots, target)
            atoms, word = new_atoms, tuple(new_word)
            changed = True
            break
    return atoms, word, frozenset(bound_e)


def _degrade_scalar_symkers(atoms, word):
    """A fused symmetric kernel whose times touch no doubly-indexed
    generator has no phase left to absorb and factors exactly into its
    time delta and 2*pi energy delta."""
    from .symbols import Generator as Gen

    gen_times = {g.time for g in word
                 if isinstance(g, Gen) and not g.integrated}
    out = []
    twopi = 0
    changed = False
    for a in atoms:
        if a.kind == sc.SYMKER and not ({a.args[0], a.args[1]} & gen_times):
            out.append(Atom(sc.DIRAC, (a.args[0], a.args[1])))
            out.append(Atom(sc.DELTA, (a.args[2], a.args[3])))
            twopi += 1
            changed = True
        else:
            out.append(a)
    return out, twopi, changed


def term_key(term: Term):
    return (term.sys, term.atoms, term.word, tuple(sorted(term.bound_e)),
            tuple(sorted(term.bound_t)), term.coeff.twopi)


class Expr:
    """A finite sum of terms, always stored canonically."""

    __slots__ = ("terms",)

    def __init__(self, terms=()):
        merged = {}
        for t in terms:
            ct = canonical_term(t)
            if ct is None:
                continue
            k = term_key(ct)
            if k in merged:
                prev = merged[k]
                merged[k] = Term(prev.coeff + ct.coeff, prev.sys, prev.atoms,
                                 prev.word, prev.bound_e, prev.bound_t)
            else:
                merged[k] = ct
        kept = [t for t in merged.values() if not t.coeff.is_zero]
        kept.sort(key=lambda t: (term_text(t, with_coeff=False), t.coeff.twopi,
                                 t.coeff.re, t.coeff.im))
        object.__setattr__(self, "terms", tuple(kept))

    # -- construction helpers ------------------------------------------

    @staticmethod
    def zero() -> "Expr":
        return Expr(())

    @staticmethod
    def one() -> "Expr":
        return Expr((Term(sc.ONE),))

    @staticmethod
    def of(*items, coeff=sc.ONE) -> "Expr":
        """Build a single-term expression from word symbols, atoms and SysOps."""
        sys, atoms, word = [], [], []
        for it in items:
            if isinstance(it, SysOp):
                sys.append(it)
            elif isinstance(it, Atom):
                atoms.append(it)
            elif isinstance(it, (Generator, Evolution, CommMarker)):
                word.append(it)
            else:
                raise TypeError(f"cannot place {it!r} in a term")
        return Expr((Term(coeff, tuple(sys), tuple(atoms), tuple(word)),))

    # -- algebra ---------------------------------------------------------

    def __add__(self, other: "Expr") -> "Expr":
        return Expr(self.terms + other.terms)

    def __sub__(self, other: "Expr") -> "Expr":
        return self + (-other)

    def __neg__(self) -> "Expr":
        return self.scaled(Coeff.of(-1))

    def scaled(self, c: Coeff) -> "Expr":
        return Expr(tuple(t.scaled(c) for t in self.terms))

    def __mul__(self, other: "Expr") -> "Expr":
        out = []
        for a in self.terms:
            for b in other.terms:
                out.append(mul_terms(a, b))
        return Expr(tuple(out))

    def adjoint(self) -> "Expr":
        out = []
        for t in self.terms:
            out.append(
                Term(
                    t.coeff.conj(),
                    tuple(s.adjoint() for s in reversed(t.sys)),
                    tuple(sc.adjoint_atom(a) for a in t.atoms),
                    tuple(g.adjoint() for g in reversed(t.word)),
                    t.bound_e,
                    t.bound_t,
                )
            )
        return Expr(tuple(out))

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, Expr):
            return NotImplemented
        return to_text(self) == to_text(other)

    def __hash__(self):
        return hash(to_text(self))

    def __repr__(self):
        return f"Expr({to_text(self)})"


def _replace_coeff(self, c):
    return Term(c, self.sys, self.atoms, self.word, self.bound_e, self.bound_t)


Term._replace_coeff = _replace_coeff


def mul_terms(a: Term, b: Term) -> Term:
    # bound variables of the right factor must not collide with anything
    # already present on the left
    left_vars = set(a.variables()) | a.bound_e | {v for v, _ in a.bound_t}
    mapping = {}
    for v in b.bound_e:
        if v in left_vars:
            mapping[v] = fresh_energy()
    for v, _ in b.bound_t:
        if v in left_vars:
            mapping[v] = fresh_time()
    if mapping:
        b = b.rename(mapping)
    return Term(
        a.coeff * b.coeff,
        a.sys + b.sys,
        a.atoms + b.atoms,
        a.word + b.word,
        a.bound_e | b.bound_e,
        a.bound_t | b.bound_t,
    )


def attach_bound(expr: Expr, bound_e=(), bound_t=()) -> Expr:
    out = []
    for t in expr.terms:
        out.append(
            Term(t.coeff, t.sys, t.atoms, t.word,
                 t.bound_e | frozenset(bound_e),
                 t.bound_t | frozenset(bound_t))
        )
    return Expr(tuple(out))


# -- serialization ---------------------------------------------------------

def _gen_text(g) -> str:
    if isinstance(g, Evolution):
        return f"U{'~' if g.dag else ''}({g.time})"
    if isinstance(g, CommMarker):
        return f"M[{g.eps[0]},{g.eps[1]}]({g.energy};{g.time})"
    s1 = g.slots[0] if g.slots[0] is not None else "*"
    s2 = g.slots[1] if g.slots[1] is not None else "*"
    return f"{g.kind}[{g.eps[0]},{g.eps[1]}]({s1},{s2};{g.time})"


def _sys_text(s: SysOp) -> str:
    dag = "~" if s.dag else ""
    if s.name == "D":
        return f"D{s.eps}{dag}"
    return f"T{s.eps}{dag}({s.arg})"


def term_text(t: Term, with_coeff=True) -> str:
    parts = []
    if with_coeff:
        parts.append(t.coeff.text())
    if t.sys:
        parts.append("sys{" + " ".join(_sys_text(s) for s in t.sys) + "}")
    if t.atoms:
        parts.append("atoms{" + " ".join(sc.atom_text(a) for a in t.atoms) + "}")
    if t.word:
        parts.append("word{" + " ".join(_gen_text(g) for g in t.word) + "}")
    if t.bound_e or t.bound_t:
        es = ",".join(sorted(t.bound_e))
        ts = ",".join(f"{v}<{u}" for v, u in sorted(t.bound_t))
        parts.append("bound{" + es + (";" if ts else "") + ts + "}")
    return " ".join(parts)


def to_text(expr: Expr) -> str:
    if not expr.terms:
        return "0"
    return " + ".join(term_text(t) for t in expr.terms)


_COEFF_RE = re.compile(r"^\((-?\d+(?:/\d+)?)([+-]\d+(?:/\d+)?)i(?:\|2pi\^(-?\d+))?\)$")
_GEN_RE = re.compile(r"^(B|Bd|N|M)\[(\d),(\d)\]\(([^;]*);([^)]*)\)$")
_U_RE = re.compile(r"^U(~?)\(([^)]*)\)$")
_SYS_RE = re.compile(r"^(D|T)(\d)(~?)(?:\(([^)]*)\))?$")
_ATOM_RE = re.compile(r"^([a-z*~]+[a-z~]*)\(([^)]*)\)$")


def _parse_coeff(s: str) -> Coeff:
    m = _COEFF_RE.match(s)
    if not m:
        raise ValueError(f"bad coefficient {s!r}")
    re_, im_, tp = m.groups()
    return Coeff(Fraction(re_), Fraction(im_), int(tp) if tp else 0)


def _parse_atom(s: str) -> Atom:
    if s.startswith("dplus*causal("):
        inner = s[len("dplus*causal("):-1]
        tpart, epart = inner.split(";")
        t1, t2 = tpart.split(",")
        x, y = epart.split(",")
        return sc.simplex(t1, t2, x, y)
    if s.startswith("dirac*2pid("):
        inner = s[len("dirac*2pid("):-1]
        tpart, epart = inner.split(";")
        t1, t2 = tpart.split(",")
        x, y = epart.split(",")
        return sc.symker(t1, t2, x, y)
    if s.startswith("dplus*gamma"):
        conj = s.startswith("dplus*gamma~")
        inner = s[s.index("(") + 1:-1]
        tpart, epart = inner.split(";")
        t1, t2 = tpart.split(",")
        e, en = epart.split(",")
        return sc.gplus(t1, t2, int(e), en, conj)
    if s.startswith("gamma"):
        conj = s.startswith("gamma~")
        inner = s[s.index("(") + 1:-1]
        e, en = inner.split(",")
        return sc.gamma_atom(int(e), en, conj)
    m = _ATOM_RE.match(s)
    if not m:
        raise ValueError(f"bad atom {s!r}")
    kind, argtext = m.groups()
    args = argtext.split(",")
    if kind in (sc.RHO, sc.W, sc.NINV):
        return Atom(kind, (int(args[0]), args[1]))
    if kind in (sc.DELTA, sc.TPD, sc.DIRAC, sc.DPLUS, sc.CAUSAL):
        return Atom(kind, tuple(args))
    raise ValueError(f"unknown atom kind in {s!r}")


def _parse_word(s: str):
    m = _U_RE.match(s)
    if m:
        return Evolution(m.group(2), m.group(1) == "~")
    m = _GEN_RE.match(s)
    if not m:
        raise ValueError(f"bad word symbol {s!r}")
    kind, e1, e2, slots, t = m.groups()
    if kind == "M":
        return CommMarker((int(e1), int(e2)), slots, t)
    parts = slots.split(",")
    sl = tuple(None if p == "*" else p for p in parts)
    return Generator(kind, (int(e1), int(e2)), sl, t)


def _parse_sys(s: str) -> SysOp:
    m = _SYS_RE.match(s)
    if not m:
        raise ValueError(f"bad system symbol {s!r}")
    name, eps, dag, arg = m.groups()
    return SysOp(name, int(eps), arg, dag == "~")


_SECTION_RE = re.compile(r"(sys|atoms|word|bound)\{([^}]*)\}")


def term_from_text(s: str) -> Term:
    s = s.strip()
    coeff_end = s.index(")") + 1
    coeff = _parse_coeff(s[:coeff_end])
    sys, atoms, word = (), (), ()
    bound_e, bound_t = frozenset(), frozenset()
    for name, body in _SECTION_RE.findall(s[coeff_end:]):
        items = body.split()
        if name == "sys":
            sys = tuple(_parse_sys(x) for x in items)
        elif name == "atoms":
            atoms = tuple(_parse_atom(x) for x in items)
        elif name == "word":
            word = tuple(_parse_word(x) for x in items)
        else:
            es, _, ts = body.partition(";")
            bound_e = frozenset(v for v in es.split(",") if v)
            pairs = []
            for p in ts.split(","):
                if p:
                    v, u = p.split("<")
                    pairs.append((v, u))
            bound_t = frozenset(pairs)
    return Term(coeff, sys, atoms, word, bound_e, bound_t)


def from_text(s: str) -> Expr:
    s = s.strip()
    if s == "0":
        return Expr.zero()
    return Expr(tuple(term_from_text(part) for part in s.split(" + ")))
