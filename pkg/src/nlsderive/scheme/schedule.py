"""Vertex-by-vertex integration schedules on a Feynman graph."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..graphs import FeynmanGraph, enumerate_feynman
from .rules import D, P1, P1L2, P2, NoRule, SchemeParams, Transition, classify

NU_BASE = 8


@dataclass(frozen=True)
class Step:
    vertex: int
    father: int
    transition: Transition | None  # None for the special vertex


@dataclass
class ScheduleState:
    graph: FeynmanGraph
    dead_side: str
    params: SchemeParams
    vbar: int | None
    dead: frozenset
    types: dict = field(default_factory=dict)  # edge id -> EdgeType, None once disregarded
    nu: dict = field(default_factory=dict)
    dead_below: dict = field(default_factory=dict)  # edge id -> dead leaves under it
    integrated: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    max_one_family: int = 0

    @property
    def live_tau(self) -> int:
        return -1 if self.dead_side == "Q1" else 1

    def integrable(self) -> list[int]:
        """Un-integrated vertices whose son edges are all typed."""
        done = set(self.integrated)
        out = []
        for v in self.graph.vertices.values():
            if v.id in done:
                continue
            if all(self._ready(s) for s in v.sons):
                out.append(v.id)
        return out

    def _ready(self, e: int) -> bool:
        child = self.graph.edges[e].child
        return child is None or child in self.integrated

    @property
    def complete(self) -> bool:
        return len(self.integrated) == self.graph.n and all(self.types.get(r) is not None for r in self.graph.roots)

    def root_types(self) -> list:
        return [self.types[r] for r in self.graph.roots]


def _vertices_above(g: FeynmanGraph, e: int) -> int:
    child = g.edges[e].child
    if child is None:
        return 0
    return 1 + sum(_vertices_above(g, s) for s in g.vertices[child].sons)


def run_schedule(
    g: FeynmanGraph,
    dead_side: str = "Q1",
    params: SchemeParams = SchemeParams(),
    vbar: int | None = None,
    choose=None,
) -> ScheduleState:
    """Integrate out every vertex, typing each father edge by the transition rules.

    Dead leaves are the outward ones for ``Q1`` and the inward ones for ``Q2``.
    With ``vbar`` the special vertex goes first and seeds a 1-family edge.
    Among integrable vertices the one with the lowest father edge id goes
    first unless ``choose`` (list of vertex ids -> vertex id) says otherwise.
    Raises NoRule (carrying the vertex) if some vertex has no transition.
    """
    if dead_side not in ("Q1", "Q2"):
        raise ValueError(f"dead side must be Q1 or Q2, got {dead_side!r}")
    if vbar is not None and vbar not in g.maximal_vertices:
        raise ValueError(f"vertex {vbar} is not maximal")
    dead_tau = 1 if dead_side == "Q1" else -1
    dead = frozenset(e for e in g.leaves if g.edges[e].tau == dead_tau)
    for a, b in g.leaf_pairing():
        assert (a in dead) != (b in dead), f"leaf pair ({a}, {b}) must have exactly one dead member"
    st = ScheduleState(g, dead_side, params, vbar, dead)
    for e in g.leaves:
        st.types[e] = D if e in dead else P2
        st.nu[e] = 1
        st.dead_below[e] = frozenset({e}) if e in dead else frozenset()

    if vbar is not None:
        v = g.vertices[vbar]
        n_dead = sum(s in dead for s in v.sons)
        assert 1 <= n_dead <= 2, f"special vertex {vbar} has {n_dead} dead sons"
        st.types[v.father] = P1L2 if n_dead == 2 else P1
        st.nu[v.father] = 1
        st.dead_below[v.father] = frozenset().union(*(st.dead_below[s] for s in v.sons))
        for s in v.sons:
            st.types[s] = None
        st.integrated.append(vbar)
        st.steps.append(Step(vbar, v.father, None))
        _check_edge(st, v.father)
        _check_alive(st)

    while len(st.integrated) < g.n:
        ready = st.integrable()
        assert ready, "no integrable vertex left"
        vid = min(ready, key=lambda w: g.vertices[w].father) if choose is None else choose(ready)
        v = g.vertices[vid]
        sons = [st.types[s] for s in v.sons]
        is_root = g.edges[v.father].role == "root"
        try:
            tr = classify(sons, is_root)
        except NoRule as exc:
            exc.vertex = vid
            raise
        st.types[v.father] = tr.father
        nu = tr.mu
        for s in v.sons:
            nu *= st.nu[s]
        st.nu[v.father] = nu
        cap = NU_BASE ** _vertices_above(g, v.father)
        assert nu <= cap, f"shift count {nu} exceeds {cap} at edge {v.father}"
        st.dead_below[v.father] = frozenset().union(*(st.dead_below[s] for s in v.sons))
        st.integrated.append(vid)
        st.steps.append(Step(vid, v.father, tr))
        _check_edge(st, v.father)
        _check_alive(st)
    assert st.complete
    return st


def _check_edge(st: ScheduleState, e: int) -> None:
    """Plain 1-, 2- and (2+lambda)-type edges point toward the live side."""
    t = st.types[e]
    if t is None or t.s:
        return
    if (t.family == 2 and t.kappa <= 1) or (t.family == 1 and t.kappa <= 1):
        tau = st.graph.edges[e].tau
        assert tau == st.live_tau, f"edge {e} of type {t} has orientation {tau}"


def _check_alive(st: ScheduleState) -> None:
    """At most one 1-family edge among edges not yet consumed by an integration."""
    consumed = set()
    for vid in st.integrated:
        consumed.update(st.graph.vertices[vid].sons)
    ones = sum(1 for e, t in st.types.items() if t is not None and t.family == 1 and e not in consumed)
    st.max_one_family = max(st.max_one_family, ones)
    assert ones <= 1, "more than one 1-family edge alive"


def all_schedules(g: FeynmanGraph, params: SchemeParams = SchemeParams()):
    """Every K-schedule and L-schedule of g: both dead sides, every special vertex."""
    for side in ("Q1", "Q2"):
        yield side, None, run_schedule(g, side, params)
        for v in g.maximal_vertices:
            yield side, v, run_schedule(g, side, params, vbar=v)


@dataclass
class ClosureReport:
    n: int
    k: int
    graphs: int = 0
    schedules: int = 0
    failures: list = field(default_factory=list)
    rule_counts: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures


def closure(n: int, k: int, params: SchemeParams = SchemeParams()) -> ClosureReport:
    """Run every schedule on every graph of F_{n,k}; failures are collected, not raised."""
    rep = ClosureReport(n, k)
    for g in enumerate_feynman(n, k):
        rep.graphs += 1
        for side in ("Q1", "Q2"):
            for vbar in [None] + list(g.maximal_vertices):
                rep.schedules += 1
                try:
                    st = run_schedule(g, side, params, vbar)
                except (NoRule, AssertionError) as exc:
                    rep.failures.append((g.canonical().decode(), side, vbar, str(exc)))
                    continue
                for step in st.steps:
                    key = "vbar" if step.transition is None else step.transition.rule
                    rep.rule_counts[key] = rep.rule_counts.get(key, 0) + 1
    return rep
