"""Classical marked trees, forests and quantum (Feynman) graphs.

Classical trees are nested tuples: ``None`` is a leaf and a vertex is
``(marked, unmarked)``.  Labelled classical vertices are ``(vid, marked,
unmarked)``.  Quantum trees are labelled ternary tuples ``(vid, marked,
same, opp)`` where ``marked`` and ``same`` keep the orientation of the
father edge and ``opp`` reverses it.  A Feynman graph is a tuple of 2k
quantum trees ``(T_1, T'_1, T_2, T'_2, ...)``; roots of ``T_j`` point
outward (tau=+1), roots of ``T'_j`` inward (tau=-1).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

from . import caps

OUT, IN = 1, -1


# ---------------------------------------------------------------- counting


@lru_cache(maxsize=None)
def catalan(n: int) -> int:
    """Catalan number by the convolution recursion."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return 1
    return sum(catalan(i) * catalan(n - 1 - i) for i in range(n))


def fuss_catalan3(m: int) -> int:
    """Number of ternary trees with m vertices, binom(3m, m)/(2m+1)."""
    return math.comb(3 * m, m) // (2 * m + 1)


def compositions(n: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Weak compositions of n into ``parts`` nonnegative parts."""
    if parts == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in compositions(n - first, parts - 1):
            yield (first,) + rest


def forest_count(n: int, k: int) -> int:
    return sum(math.prod(catalan(m) for m in c) for c in compositions(n, k))


def feynman_count_formula(n: int, k: int) -> int:
    """|F_{n,k}| from the ternary-tree decomposition of each component."""
    return sum(math.prod(fuss_catalan3(m) for m in c) for c in compositions(n, 2 * k))


# ------------------------------------------------------- classical trees


def tree_size(t) -> int:
    if t is None:
        return 0
    return 1 + tree_size(t[-2]) + tree_size(t[-1])


@lru_cache(maxsize=None)
def _trees(n: int) -> tuple:
    if n == 0:
        return (None,)
    out = []
    for i in range(n):
        for m in _trees(i):
            for u in _trees(n - 1 - i):
                out.append((m, u))
    return tuple(out)


def enumerate_marked_trees(n: int) -> list:
    """All marked rooted binary trees with n vertices.

    Ordered by the size of the marked subtree, ascending.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > 2 * caps.caps()["n"] + 4:
        caps.check("n", n)
    return list(_trees(n))


def enumerate_forests(n: int, k: int) -> list[tuple]:
    """All ordered k-tuples of marked trees with n vertices in total."""
    if n < 0 or k < 1:
        raise ValueError("need n >= 0 and k >= 1")
    caps.check("n", n)
    caps.check("k", k)
    out = []
    for sizes in compositions(n, k):
        for combo in itertools.product(*(_trees(m) for m in sizes)):
            out.append(tuple(combo))
    return out


def label_forest(forest: Sequence) -> tuple:
    """Attach preorder vertex ids (across the forest) to a classical forest."""
    counter = itertools.count()

    def lab(t):
        if t is None:
            return None
        vid = next(counter)
        m = lab(t[0])
        u = lab(t[1])
        return (vid, m, u)

    return tuple(lab(t) for t in forest)


def _parent_map(labelled_forest) -> dict:
    parent = {}

    def walk(node, father):
        if node is None:
            return
        parent[node[0]] = father
        for son in node[1:]:
            walk(son, node[0])

    for root in labelled_forest:
        walk(root, None)
    return parent


def linear_extensions(parent: dict) -> Iterator[tuple]:
    """All orders of the vertices in which every father precedes its sons.

    ``parent`` maps each vertex to its father (None for a top vertex).
    Yields tuples listing the vertices by increasing label.
    """
    children: dict = {v: [] for v in parent}
    for v, f in parent.items():
        if f is not None:
            children[f].append(v)
    top = sorted(v for v, f in parent.items() if f is None)
    n = len(parent)
    seq: list = []

    def rec(avail):
        if len(seq) == n:
            yield tuple(seq)
            return
        for i, v in enumerate(avail):
            rest = avail[:i] + avail[i + 1:] + children[v]
            seq.append(v)
            yield from rec(sorted(rest))
            seq.pop()

    yield from rec(top)


def tree_orderings(forest: Sequence) -> list[tuple]:
    """Complete orderings of a classical forest compatible with the tree order."""
    return list(linear_extensions(_parent_map(label_forest(forest))))


def count_ordered_trees(n: int) -> int:
    """Sum over trees with n vertices of the number of complete orderings."""
    return sum(len(tree_orderings((t,))) for t in enumerate_marked_trees(n))


def count_ordered_forests(n: int, k: int) -> int:
    """Sum over forests of the number of complete orderings, by enumeration."""
    return sum(len(tree_orderings(f)) for f in enumerate_forests(n, k))


def ordered_forests_formula(n: int, k: int) -> int:
    return math.factorial(n + k - 1) // math.factorial(k - 1)


# -------------------------------------------------------- Feynman graphs


@dataclass(frozen=True)
class Edge:
    id: int
    tau: int
    comp: int
    parent: int | None  # vertex on the root side, None for a root edge
    child: int | None  # vertex on the far side, None for a leaf
    role: str  # "root", "marked", "same" or "opp"

    @property
    def ends(self) -> tuple:
        """(from, to) following the arrow; None marks an external end."""
        if self.tau == OUT:
            return self.parent, self.child
        return self.child, self.parent


@dataclass(frozen=True)
class Vertex:
    id: int
    comp: int
    father: int
    sons: tuple[int, int, int]  # marked, same, opp edge ids
    sigma: int


@dataclass(frozen=True)
class Ordering:
    """A partial order on the vertices, stored as its transitively closed relation."""

    relations: frozenset

    def less(self, v: int, w: int) -> bool:
        return (v, w) in self.relations

    def labels(self, vertices: Sequence[int]) -> dict:
        """A compatible bijection to 1..n (smallest vertex id first among ties)."""
        remaining = set(vertices)
        out = {}
        label = 1
        while remaining:
            ready = min(v for v in remaining if all((u, v) not in self.relations for u in remaining))
            out[ready] = label
            label += 1
            remaining.remove(ready)
        return out


def _closure(pairs: set) -> frozenset:
    rel = set(pairs)
    changed = True
    while changed:
        changed = False
        by_first: dict = {}
        for a, b in rel:
            by_first.setdefault(a, set()).add(b)
        for a, b in list(rel):
            for c in by_first.get(b, ()):
                if (a, c) not in rel:
                    rel.add((a, c))
                    changed = True
    return frozenset(rel)


def _shape(node) -> str:
    if node is None:
        return "x"
    return "(" + _shape(node[1]) + _shape(node[2]) + _shape(node[3]) + ")"


class FeynmanGraph:
    """A quantum graph made of k labelled tree pairs."""

    def __init__(self, trees: Sequence):
        if len(trees) % 2 or not trees:
            raise ValueError("need an even, nonzero number of trees")
        self.trees = tuple(trees)
        self.k = len(trees) // 2
        self.edges: list[Edge] = []
        self.vertices: dict[int, Vertex] = {}
        for c, tree in enumerate(self.trees):
            self._flatten(tree, c, OUT if c % 2 == 0 else IN, None, "root")
        self.n = len(self.vertices)
        self._validate()

    def _flatten(self, node, comp, tau, parent, role) -> int:
        eid = len(self.edges)
        self.edges.append(None)  # placeholder keeps preorder ids
        child = None if node is None else node[0]
        self.edges[eid] = Edge(eid, tau, comp, parent, child, role)
        if node is not None:
            vid = node[0]
            if vid in self.vertices:
                raise ValueError(f"duplicate vertex id {vid}")
            self.vertices[vid] = None
            sons = (
                self._flatten(node[1], comp, tau, vid, "marked"),
                self._flatten(node[2], comp, tau, vid, "same"),
                self._flatten(node[3], comp, -tau, vid, "opp"),
            )
            self.vertices[vid] = Vertex(vid, comp, eid, sons, tau)
        return eid

    def _validate(self) -> None:
        for v in self.vertices.values():
            incident = [self.edges[v.father]] + [self.edges[s] for s in v.sons]
            n_in = sum(1 for e in incident if e.ends[1] == v.id)
            n_out = sum(1 for e in incident if e.ends[0] == v.id)
            if n_in != 2 or n_out != 2:
                raise ValueError(f"vertex {v.id} is not 2-in/2-out")

    # ---- derived sets

    @property
    def roots(self) -> list[int]:
        return [e.id for e in self.edges if e.role == "root"]

    @property
    def leaves(self) -> list[int]:
        return [e.id for e in self.edges if e.child is None]

    def is_trivial_comp(self, c: int) -> bool:
        return self.trees[c] is None

    @property
    def trivial_roots(self) -> list[int]:
        return [e for e in self.roots if self.edges[e].child is None]

    @property
    def leaves_trivial(self) -> list[int]:
        return self.trivial_roots

    @property
    def leaves_nontrivial(self) -> list[int]:
        r1 = set(self.trivial_roots)
        return [e for e in self.leaves if e not in r1]

    @property
    def e2(self) -> list[int]:
        r1 = set(self.trivial_roots)
        return [e.id for e in self.edges if e.id not in r1]

    @property
    def k1(self) -> int:
        return len(self.trivial_roots)

    @property
    def maximal_vertices(self) -> list[int]:
        return sorted(
            v.id for v in self.vertices.values() if all(self.edges[s].child is None for s in v.sons)
        )

    def root_of(self, j: int, primed: bool) -> int:
        return self.roots[2 * j + int(primed)]

    def father_edge(self, e: int) -> int | None:
        p = self.edges[e].parent
        return None if p is None else self.vertices[p].father

    # ---- ancestors, pairing, orderings

    def ancestor(self, leaf: int) -> int:
        e = leaf
        if self.edges[e].child is not None:
            raise ValueError(f"edge {leaf} is not a leaf")
        while self.edges[e].role == "marked":
            e = self.father_edge(e)
        return e

    def chain(self, e: int) -> list[int]:
        """Vertices met walking away from edge e through marked sons."""
        out = []
        v = self.edges[e].child
        while v is not None:
            out.append(v)
            v = self.edges[self.vertices[v].sons[0]].child
        return out

    def tip(self, e: int) -> int:
        """The leaf reached from e through marked sons."""
        while self.edges[e].child is not None:
            e = self.vertices[self.edges[e].child].sons[0]
        return e

    def ancestor_pairs(self) -> list[tuple[int, int]]:
        """Pairs of ancestor edges (outward, inward) whose tips are paired leaves."""
        pairs = []
        for j in range(self.k):
            pairs.append((self.root_of(j, False), self.root_of(j, True)))
        for vid in sorted(self.vertices):
            v = self.vertices[vid]
            a, b = v.sons[1], v.sons[2]
            if self.edges[a].tau == IN:
                a, b = b, a
            pairs.append((a, b))
        return pairs

    def leaf_pairing(self) -> list[tuple[int, int]]:
        """Perfect matching of leaves as (outward leaf, inward leaf) pairs."""
        return [(self.tip(a), self.tip(b)) for a, b in self.ancestor_pairs()]

    def orderable_pairs(self) -> list[tuple[int, int]]:
        """(v, w) with v on the marked chain of T_j and w on that of T'_j."""
        out = []
        for j in range(self.k):
            for v in self.chain(self.root_of(j, False)):
                for w in self.chain(self.root_of(j, True)):
                    out.append((v, w))
        return out

    def tree_order(self) -> frozenset:
        pairs = set()
        for v in self.vertices.values():
            for s in v.sons:
                c = self.edges[s].child
                if c is not None:
                    pairs.add((v.id, c))
        return _closure(pairs)

    def chain_pairs(self) -> list[tuple[list[int], list[int]]]:
        return [(self.chain(a), self.chain(b)) for a, b in self.ancestor_pairs()]

    def num_orderings(self) -> int:
        return math.prod(math.comb(len(a) + len(b), len(a)) for a, b in self.chain_pairs())

    def orderings(self) -> list[Ordering]:
        """Orders generated by the tree order and an interleaving of each chain pair."""
        base = set(self.tree_order())
        per_pair = []
        for a, b in self.chain_pairs():
            options = []
            for pos in itertools.combinations(range(len(a) + len(b)), len(a)):
                seq, ia, ib = [], iter(a), iter(b)
                for i in range(len(a) + len(b)):
                    seq.append(next(ia) if i in pos else next(ib))
                options.append(list(zip(seq, seq[1:])))
            per_pair.append(options)
        out = []
        for choice in itertools.product(*per_pair):
            rel = set(base)
            for links in choice:
                rel.update(links)
            out.append(Ordering(_closure(rel)))
        return out

    # ---- η

    def assign_eta(self, leaf_values: dict) -> dict:
        """Extend positive leaf values to all edges, father = sum of sons."""
        eta = {}
        for leaf in self.leaves:
            val = leaf_values[leaf]
            if not val > 0:
                raise ValueError(f"leaf {leaf} has nonpositive eta {val}")
            eta[leaf] = float(val)

        def rec(e):
            if e in eta:
                return eta[e]
            v = self.vertices[self.edges[e].child]
            eta[e] = sum(rec(s) for s in v.sons)
            return eta[e]

        for r in self.roots:
            rec(r)
        return eta

    # ---- canonical forms

    def canonical(self) -> bytes:
        return "|".join(_shape(t) for t in self.trees).encode()

    def relabel(self) -> "FeynmanGraph":
        """Copy with vertex ids replaced by their preorder positions."""
        counter = itertools.count()

        def rec(node):
            if node is None:
                return None
            vid = next(counter)
            return (vid, rec(node[1]), rec(node[2]), rec(node[3]))

        return FeynmanGraph([rec(t) for t in self.trees])

    def relabel_map(self) -> dict:
        """Vertex id -> preorder position (the ids used by ``relabel``)."""
        order = []

        def rec(node):
            if node is None:
                return
            order.append(node[0])
            for s in node[1:]:
                rec(s)

        for t in self.trees:
            rec(t)
        return {v: i for i, v in enumerate(order)}

    def edge_list(self) -> list[tuple]:
        """Flat description used by the brute-force canonical scheme."""
        out = []
        for e in self.edges:
            ends = []
            for end, is_parent in zip(e.ends, (e.tau == OUT, e.tau == IN)):
                if end is not None:
                    ends.append(("v", end))
                elif is_parent:
                    ends.append(("r", e.comp))
                else:
                    ends.append(("l", 0))
            out.append((e.tau, ends[0], ends[1], e.role == "marked"))
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, FeynmanGraph) and self.canonical() == other.canonical()

    def __hash__(self) -> int:
        return hash(self.canonical())

    def __repr__(self) -> str:
        return f"FeynmanGraph({self.canonical().decode()})"

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "vertices": [
                {
                    "id": v.id,
                    "father_edge": v.father,
                    "sons": list(v.sons),
                    "marked_son": v.sons[0],
                    "sigma": v.sigma,
                }
                for v in sorted(self.vertices.values(), key=lambda v: v.id)
            ],
            "edges": [{"id": e.id, "tau": e.tau, "from": e.ends[0], "to": e.ends[1]} for e in self.edges],
            "root_labels": [
                {"edge": r, "pair": i // 2, "primed": bool(i % 2)} for i, r in enumerate(self.roots)
            ],
            "pairing": [list(p) for p in self.leaf_pairing()],
            "canonical": self.canonical().decode(),
        }

    @classmethod
    def from_canonical(cls, text: str | bytes) -> "FeynmanGraph":
        if isinstance(text, bytes):
            text = text.decode()
        counter = itertools.count()

        def parse(s, i):
            if s[i] == "x":
                return None, i + 1
            if s[i] != "(":
                raise ValueError(f"bad canonical string at {i}")
            vid = next(counter)
            sons = []
            i += 1
            for _ in range(3):
                node, i = parse(s, i)
                sons.append(node)
            if s[i] != ")":
                raise ValueError(f"bad canonical string at {i}")
            return (vid, *sons), i + 1

        trees = []
        for part in text.split("|"):
            node, end = parse(part, 0)
            if end != len(part):
                raise ValueError("trailing characters in canonical string")
            trees.append(node)
        return cls(trees)


def brute_canonical(g: FeynmanGraph) -> tuple:
    """Independent canonical form: minimal sorted edge list over vertex relabelings."""
    raw = g.edge_list()
    verts = sorted(g.vertices)
    best = None
    for perm in itertools.permutations(range(len(verts))):
        m = dict(zip(verts, perm))

        def end(x):
            return ("v", m[x[1]]) if x[0] == "v" else x

        cand = tuple(sorted((t, end(a), end(b), mk) for t, a, b, mk in raw))
        if best is None or cand < best:
            best = cand
    return best


def build_feynman(forest: Sequence, sigma: Sequence[int]) -> FeynmanGraph:
    """The quantum graph of a classical forest with per-vertex signs.

    Vertex ids follow the preorder labelling of the forest, so ``sigma[i]``
    belongs to the i-th vertex met in preorder.
    """
    labelled = label_forest(forest)
    n = sum(tree_size(t) for t in forest)
    if len(sigma) != n:
        raise ValueError(f"need {n} signs, got {len(sigma)}")
    if any(s not in (1, -1) for s in sigma):
        raise ValueError("signs must be +1 or -1")

    def build(node, orient):
        if node is None:
            return None
        vid, m, u = node
        if sigma[vid] == orient:
            return (vid, build(m, orient), build(u, orient), build(u, -orient))
        return build(m, orient)

    trees = []
    for root in labelled:
        trees.append(build(root, OUT))
        trees.append(build(root, IN))
    return FeynmanGraph(trees)


def classical_order(forest: Sequence) -> frozenset:
    """Ancestor relation (v, w) of a classical forest with preorder labels."""
    parent = _parent_map(label_forest(forest))
    pairs = set()
    for v, f in parent.items():
        while f is not None:
            pairs.add((f, v))
            f = parent[f]
    return frozenset(pairs)


def to_classical(g: FeynmanGraph, order: Ordering) -> tuple[tuple, tuple]:
    """Recover (forest, sigma) from an ordered Feynman graph.

    Returns the unlabelled forest and the signs in its preorder, together
    enough to rebuild ``g`` with ``build_feynman``.
    """
    sig_by_vertex = {}
    trace = []

    def rec(a, b):
        # a, b: quantum subtrees of orientation +1 and -1 for one classical subtree
        if a is None and b is None:
            return None
        if b is None or (a is not None and order.less(a[0], b[0])):
            vid, m, s, o = a
            sig_by_vertex[vid] = OUT
            trace.append(vid)
            return (rec(m, b), rec(s, o))
        if a is not None and not order.less(b[0], a[0]):
            raise ValueError("ordering does not decide a chain pair")
        vid, m, s, o = b
        sig_by_vertex[vid] = IN
        trace.append(vid)
        # for an inward vertex the same son is inward and opp is outward
        return (rec(a, m), rec(o, s))

    forest = tuple(rec(g.trees[2 * j], g.trees[2 * j + 1]) for j in range(g.k))
    sigma = tuple(sig_by_vertex[v] for v in trace)
    return forest, sigma


def enumerate_feynman(n: int, k: int) -> list[FeynmanGraph]:
    """All Feynman graphs with n vertices and k tree pairs, deduplicated over (G, sigma)."""
    if n < 0 or k < 1:
        raise ValueError("need n >= 0 and k >= 1")
    caps.check("n", n)
    caps.check("k", k)
    seen: dict = {}
    for forest in enumerate_forests(n, k):
        for sigma in itertools.product((OUT, IN), repeat=n):
            g = build_feynman(forest, sigma)
            key = g.canonical()
            if key not in seen:
                seen[key] = g.relabel()
    return [seen[key] for key in sorted(seen)]


@lru_cache(maxsize=None)
def _ternary(m: int) -> tuple:
    if m == 0:
        return (None,)
    out = []
    for a in range(m):
        for b in range(m - a):
            c = m - 1 - a - b
            for x in _ternary(a):
                for y in _ternary(b):
                    for z in _ternary(c):
                        out.append((0, x, y, z))
    return tuple(out)


def enumerate_feynman_direct(n: int, k: int) -> list[FeynmanGraph]:
    """All Feynman graphs built directly as tuples of ternary trees."""
    caps.check("n", n)
    caps.check("k", k)
    out = []
    for sizes in compositions(n, 2 * k):
        for combo in itertools.product(*(_ternary(m) for m in sizes)):
            out.append(FeynmanGraph(_offset(combo)))
    return sorted(out, key=lambda g: g.canonical())


def _offset(trees):
    counter = itertools.count()

    def rec(node):
        if node is None:
            return None
        vid = next(counter)
        return (vid, rec(node[1]), rec(node[2]), rec(node[3]))

    return [rec(t) for t in trees]


def find_collision(n: int, k: int):
    """Two different (forest, sigma) pairs with the same Feynman graph, or None."""
    seen: dict = {}
    for forest in enumerate_forests(n, k):
        for sigma in itertools.product((OUT, IN), repeat=n):
            key = build_feynman(forest, sigma).canonical()
            if key in seen:
                return seen[key], (forest, sigma)
            seen[key] = (forest, sigma)
    return None


def graphs_to_json(graphs: Sequence[FeynmanGraph]) -> str:
    return json.dumps([g.to_dict() for g in graphs], indent=1, sort_keys=True)
