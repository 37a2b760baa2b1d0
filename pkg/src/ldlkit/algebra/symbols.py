"""Noncommuting symbols of the master-field algebra.

Three generator kinds live here: annihilators ``B``, creators ``Bd`` and the
quadratic number generators ``N``.  Each carries a pair of band labels
(eps1, eps2), two energy slots and one time variable.  An energy slot holding
``None`` means that slot has been integrated over the whole line, which gives
the one-energy ("integrated") forms B(E, t), N(E, t):

* integrated B / Bd keep the second slot live:  B(E, t) has slots (None, E)
* integrated N keeps the first slot live:       N(E, t) has slots (E, None)

The evolution operator ``U_t`` is an opaque word symbol; system operators
(D_eps and the resummed T_eps(E)) are opaque as well and commute with every
generator but not with each other.
"""

from __future__ import annotations

from dataclasses import dataclass

B_KIND = "B"
BD_KIND = "Bd"
N_KIND = "N"
_KINDS = (B_KIND, BD_KIND, N_KIND)


@dataclass(frozen=True, order=True)
class Generator:
    kind: str
    eps: tuple[int, int]
    slots: tuple[str | None, str | None]
    time: str

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if tuple(sorted(set(self.eps) - {0, 1})):
            raise ValueError(f"band labels must be 0 or 1, got {self.eps}")
        if len(self.slots) != 2:
            raise ValueError("exactly two energy slots required")

    @property
    def integrated(self) -> bool:
        return None in self.slots

    def adjoint(self) -> "Generator":
        if self.kind == B_KIND:
            return Generator(BD_KIND, self.eps, self.slots, self.time)
        if self.kind == BD_KIND:
            return Generator(B_KIND, self.eps, self.slots, self.time)
        # number generator: labels and slots swap
        return Generator(
            N_KIND,
            (self.eps[1], self.eps[0]),
            (self.slots[1], self.slots[0]),
            self.time,
        )

    def rename(self, mapping: dict[str, str]) -> "Generator":
        slots = tuple(mapping.get(s, s) if s is not None else None for s in self.slots)
        return Generator(self.kind, self.eps, slots, mapping.get(self.time, self.time))

    def variables(self):
        for s in self.slots:
            if s is not None:
                yield s
        yield self.time


@dataclass(frozen=True, order=True)
class Evolution:
    """Opaque evolution-operator symbol U_t (dag tracks its adjoint)."""

    time: str
    dag: bool = False

    def adjoint(self) -> "Evolution":
        return Evolution(self.time, not self.dag)

    def rename(self, mapping):
        return Evolution(mapping.get(self.time, self.time), self.dag)

    def variables(self):
        yield self.time


@dataclass(frozen=True, order=True)
class CommMarker:
    """Opaque placeholder for [B_{eps}(E, t), U_t], used by the golden-rule
    derivations to keep the unknown of the pivot equation symbolic."""

    eps: tuple[int, int]
    energy: str
    time: str

    def adjoint(self):
        raise UnsupportedOperation("commutator markers have no adjoint")

    def rename(self, mapping):
        return CommMarker(
            self.eps, mapping.get(self.energy, self.energy), mapping.get(self.time, self.time)
        )

    def variables(self):
        yield self.energy
        yield self.time


@dataclass(frozen=True, order=True)
class SysOp:
    """System-space operator symbol: D_eps or T_eps(E), optionally daggered."""

    name: str  # "D" or "T"
    eps: int
    arg: str | None = None
    dag: bool = False

    def __post_init__(self):
        if self.name not in ("D", "T"):
            raise ValueError(f"unknown system symbol {self.name!r}")
        if self.name == "T" and self.arg is None:
            raise ValueError("T requires an energy argument")

    def adjoint(self) -> "SysOp":
        if self.name == "D":
            # D_0 = D, D_1 = D^+; the adjoint flips the label
            return SysOp("D", 1 - self.eps, None, False)
        return SysOp("T", self.eps, self.arg, not self.dag)

    def rename(self, mapping):
        if self.arg is None:
            return self
        return SysOp(self.name, self.eps, mapping.get(self.arg, self.arg), self.dag)

    def variables(self):
        if self.arg is not None:
            yield self.arg


class UnsupportedOperation(Exception):
    pass


# -- constructors ----------------------------------------------------------

def b_op(e1, e2, v1, v2, t) -> Generator:
    return Generator(B_KIND, (e1, e2), (v1, v2), t)


def bd_op(e1, e2, v1, v2, t) -> Generator:
    return Generator(BD_KIND, (e1, e2), (v1, v2), t)


def n_op(e1, e2, v1, v2, t) -> Generator:
    return Generator(N_KIND, (e1, e2), (v1, v2), t)


def b_int(e1, e2, energy, t) -> Generator:
    return Generator(B_KIND, (e1, e2), (None, energy), t)


def bd_int(e1, e2, energy, t) -> Generator:
    return Generator(BD_KIND, (e1, e2), (None, energy), t)


def n_int(e1, e2, energy, t) -> Generator:
    return Generator(N_KIND, (e1, e2), (energy, None), t)


def d_sys(eps: int) -> SysOp:
    return SysOp("D", eps)


def t_sys(eps: int, energy: str, dag: bool = False) -> SysOp:
    return SysOp("T", eps, energy, dag)
