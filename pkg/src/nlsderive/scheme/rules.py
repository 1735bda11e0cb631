"""Edge types and the vertex transition rules of the integration scheme.

A type records the momentum decay an edge carries once all vertices above it
have been integrated out.  Decay exponents are 2 + kappa or 1 + kappa with
kappa in {0, lambda, 2 lambda}; ``s`` marks the extra spherical factor.
Kappa is stored in units of lambda so that the rule conditions are exact
integer comparisons.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence


class NoRule(ValueError):
    """No transition applies; ``reason`` is the structural rule letter if any."""

    def __init__(self, message: str, reason: str | None = None, vertex: int | None = None):
        super().__init__(message)
        self.reason = reason
        self.vertex = vertex


class AmbiguousInput(ValueError):
    pass


@dataclass(frozen=True)
class SchemeParams:
    lam: float = 0.09
    eps: float = 0.04

    def __post_init__(self):
        if not 0 < self.lam < 0.1:
            raise ValueError(f"lambda must lie in (0, 1/10), got {self.lam}")
        if not 0 < self.eps < self.lam / 2:
            raise ValueError(f"epsilon must lie in (0, lambda/2), got {self.eps}")

    def kappa(self, units: int) -> float:
        return units * self.lam


@dataclass(frozen=True, order=True)
class EdgeType:
    family: int  # 0 for dead edges, otherwise the base exponent 1 or 2
    kappa: int = 0  # units of lambda
    s: bool = False

    def __post_init__(self):
        if self.family not in (0, 1, 2):
            raise AmbiguousInput(f"unknown edge family {self.family!r}")
        if not isinstance(self.kappa, int) or self.kappa not in (0, 1, 2):
            raise AmbiguousInput(f"kappa must be 0, 1 or 2 units of lambda, got {self.kappa!r}")
        if self.family == 0 and (self.kappa or self.s):
            raise AmbiguousInput("a dead edge carries no decay")

    @property
    def dead(self) -> bool:
        return self.family == 0

    @property
    def tag(self) -> str:
        if self.family == 0:
            return "d"
        if self.s:
            return f"S{self.family}k{self.kappa}"
        return f"P{self.family}" + ("", "λ", "λ2")[self.kappa]

    def without_s(self) -> "EdgeType":
        return EdgeType(self.family, self.kappa) if self.s else self

    def exponent(self, params: SchemeParams) -> float:
        return float(self.family) + params.kappa(self.kappa) if self.family else 0.0

    def __str__(self) -> str:
        return self.tag


D = EdgeType(0)
P2, P2L, P2L2 = EdgeType(2, 0), EdgeType(2, 1), EdgeType(2, 2)
P1, P1L, P1L2 = EdgeType(1, 0), EdgeType(1, 1), EdgeType(1, 2)


def S2(kappa: int) -> EdgeType:
    return EdgeType(2, kappa, True)


def S1(kappa: int) -> EdgeType:
    return EdgeType(1, kappa, True)


ALL_TYPES: tuple[EdgeType, ...] = (D,) + tuple(
    EdgeType(f, k, s) for f in (2, 1) for s in (False, True) for k in (0, 1, 2)
)

_TAGS = {t.tag: t for t in ALL_TYPES}
_TAGS.update({"P2l": P2L, "P2l2": P2L2, "P1l": P1L, "P1l2": P1L2})


def parse_type(tag: str) -> EdgeType:
    try:
        return _TAGS[tag]
    except KeyError:
        raise AmbiguousInput(f"unknown edge type {tag!r}") from None


# father-edge multiplicity factor of each rule (number of shift terms it can create)
RULE_MU = {1: 1, 6: 1, 2: 2, 7: 2, 3: 3, 4: 3, 5: 3, 8: 3, 9: 3, 10: 3, 11: 3, 12: 3}

_FORBIDDEN = {
    "b": [(P2, P2, P2)],
    "c": [(P2L, P2, P2)],
    "d": [(P2L, P2L, P2)],
    "f": [(P1, P2, P2), (P1, P2L, P2), (P1, P2L, P2L)],
    "g": [(P1L, P2, P2), (P1L, P2L, P2)],
}
_FORBIDDEN_SETS = {k: [Counter(v) for v in vals] for k, vals in _FORBIDDEN.items()}


def structural_violation(sons: Sequence[EdgeType]) -> str | None:
    """Letter of the structural rule a)-g) that the son multiset breaks, if any."""
    if sum(t.dead for t in sons) > 2:
        return "a"
    if sum(t.family == 1 for t in sons) > 1:
        return "e"
    c = Counter(sons)
    for letter, patterns in _FORBIDDEN_SETS.items():
        if any(c == p for p in patterns):
            return letter
    return None


def _plain(t: EdgeType, family: int) -> bool:
    return t.family == family and not t.s


def _match(sons: tuple[EdgeType, ...]) -> tuple[int, EdgeType] | None:
    """First rule (in numeric order) matching a sorted son triple."""
    dead = [t for t in sons if t.dead]
    live = [t for t in sons if not t.dead]
    ones = [t for t in live if t.family == 1]
    twos = [t for t in live if t.family == 2]
    nd = len(dead)
    if not ones:
        if nd == 2 and _plain(twos[0], 2):
            return 1, S2(twos[0].kappa)
        if nd == 1 and all(_plain(t, 2) for t in twos):
            return 2, P2L2
        if nd == 0:
            plain = [t for t in twos if not t.s]
            if len(plain) == 3:
                if sum(t.kappa for t in plain) >= 3:
                    return 3, P2L2
                if Counter(plain) == Counter((P2L2, P2, P2)):
                    return 4, P2L
            if len(plain) == 2:
                return 5, P2L2
        return None
    one = ones[0]
    if nd == 2 and not one.s:
        return 6, S1(one.kappa)
    if nd == 1 and not one.s and _plain(twos[0], 2):
        return 7, P1L2
    if nd == 0:
        plain2 = [t for t in twos if not t.s]
        if not one.s and len(plain2) == 2:
            if one.kappa + sum(t.kappa for t in plain2) >= 3:
                return 8, P1L2
            if one == P1L2 and plain2 == [P2, P2]:
                return 9, P1L
            if one == P1 and Counter(plain2) == Counter((P2L2, P2)):
                return 10, P1L
        if one.s and len(plain2) == 2:
            return 11, P1L2
        if not one.s and len(plain2) == 1:
            return 12, P1L2
    return None


@dataclass(frozen=True)
class Transition:
    rule: int
    sons: tuple[EdgeType, ...]
    father: EdgeType
    dropped: int  # number of spherical factors estimated by one
    is_root: bool = False

    @property
    def mu(self) -> int:
        return RULE_MU[self.rule]


def classify(son_types: Iterable[EdgeType], is_root: bool = False, drop_s: bool = False) -> Transition:
    """Match a son multiset against the transitions 1-12.

    Spherical factors are dropped only when needed, trying the smallest number
    of drops first.  ``drop_s`` strips the spherical factor from the result.
    """
    sons = tuple(son_types)
    if len(sons) != 3:
        raise AmbiguousInput(f"a vertex has three son edges, got {len(sons)}")
    for t in sons:
        if not isinstance(t, EdgeType):
            raise AmbiguousInput(f"not an edge type: {t!r}")
    if not isinstance(is_root, bool):
        raise AmbiguousInput("is_root must be a bool")
    letter = structural_violation(sons)
    if letter is not None:
        raise NoRule(f"son edges ({', '.join(map(str, sons))}) violate rule {letter})", reason=letter)
    spherical = [i for i, t in enumerate(sons) if t.s]
    for size in range(len(spherical) + 1):
        for drop in itertools.combinations(spherical, size):
            trial = tuple(sorted(t.without_s() if i in drop else t for i, t in enumerate(sons)))
            hit = _match(trial)
            if hit is not None:
                rule, father = hit
                if drop_s:
                    father = father.without_s()
                return Transition(rule, tuple(sorted(sons)), father, size, is_root)
    raise NoRule(f"no transition for son edges ({', '.join(map(str, sons))})")


def apply_transition(son_types: Iterable[EdgeType], is_root: bool = False, drop_s: bool = False) -> EdgeType:
    """Father type after integrating out a vertex with the given son types.

    At a root the type is unchanged; its spherical factor then refers to the
    root momentum squared instead of an alpha variable.
    """
    return classify(son_types, is_root, drop_s).father
