"""Typed feature structures with destructive, trailed unification.

A :class:`Store` owns a population of :class:`Node` objects.  Unification
merges two nodes by forwarding one to the other (union-find without path
compression) and records every mutation on an undo trail, so a failed
unification, or an explicit :meth:`Store.undo_to`, restores the store
exactly.  Substructure is instantiated lazily: a node's ``dag`` stays
``None`` until some feature of it is touched.

Licensing and delayed goals are delegated to a constraint system (see
:mod:`morphounify.constraints`); a store without one is a plain
well-typed unifier.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass

from .type_system import TOP, TypeHierarchy, is_literal, literal

Path = tuple[str, ...]


class UnificationFailure(Exception):
    """Raised internally when a unification or constraint fails."""


class EngineError(Exception):
    """Misuse of the engine, as opposed to ordinary unification failure."""


class Node:
    __slots__ = ("id", "type", "dag", "goals", "forward")

    def __init__(self, nid: int, type_: str):
        self.id = nid
        self.type = type_
        self.dag: dict[str, Node] | None = None
        self.goals: tuple = ()
        self.forward: Node | None = None

    def __repr__(self) -> str:
        return f"<Node {self.id} {self.type}>"


def deref(n: Node) -> Node:
    while n.forward is not None:
        n = n.forward
    return n


@dataclass(frozen=True)
class Checkpoint:
    mark: int
    serial: int


def parse_path(path: str | Sequence[str]) -> Path:
    if isinstance(path, str):
        if not path:
            return ()
        return tuple(p for p in path.replace(":", "|").split("|") if p)
    return tuple(path)


class Store:
    """Single-threaded engine state: nodes, undo trail, agenda."""

    def __init__(self, hierarchy: TypeHierarchy, system=None, trace=None):
        self.hierarchy = hierarchy
        self.system = system
        self.trace = trace
        self.trail: list[tuple[object, str, object]] = []
        self.nodes: list[Node] = []
        self.goals: list = []
        self.choices: tuple = ()
        self._queue: deque = deque()
        self._busy = False
        self._live: list[int] = []
        self._serial = itertools.count()
        self.truncated = False

    # -- trail -----------------------------------------------------------

    def _set(self, obj, attr: str, value) -> None:
        self.trail.append((obj, attr, getattr(obj, attr)))
        setattr(obj, attr, value)

    def _append(self, items: list, value) -> None:
        """Append to ``items`` so that undo removes the entry again."""
        self.trail.append((items, None, len(items)))
        items.append(value)

    def checkpoint(self) -> Checkpoint:
        cp = Checkpoint(len(self.trail), next(self._serial))
        self._live.append(cp.serial)
        return cp

    def undo_to(self, cp: Checkpoint) -> None:
        if cp.serial not in self._live or cp.mark > len(self.trail):
            raise EngineError("checkpoint was already undone")
        while len(self.trail) > cp.mark:
            obj, attr, old = self.trail.pop()
            if attr is None:
                del obj[old:]
            else:
                setattr(obj, attr, old)
        while self._live[-1] != cp.serial:
            self._live.pop()

    def release(self, cp: Checkpoint) -> None:
        """Forget ``cp`` (and later checkpoints) while keeping the changes."""
        if cp.serial in self._live:
            del self._live[self._live.index(cp.serial):]

    def _transaction(self, fn, *args):
        if self._busy:
            return fn(*args)
        cp = self.checkpoint()
        self._busy = True
        try:
            result = fn(*args)
            self._drain()
        except BaseException:
            self._queue.clear()
            self._busy = False
            self.undo_to(cp)
            self.release(cp)
            raise
        self._busy = False
        self.release(cp)
        return result

    def _attempt(self, fn, *args):
        try:
            return self._transaction(fn, *args)
        except UnificationFailure:
            return None

    # -- node creation -----------------------------------------------------

    def _new_node(self, t: str) -> Node:
        self.hierarchy.check(t)
        n = Node(len(self.nodes), t)
        self._append(self.nodes, n)
        if self.system is not None:
            self._queue.append(("license", n))
        return n

    def new_node(self, t: str = TOP) -> Node:
        """Fresh node of type ``t``; raises EngineError if ``t`` cannot be licensed."""
        n = self._attempt(self._new_node, t)
        if n is None:
            raise EngineError(f"no licensed structure of type {t} exists")
        return n

    def string_node(self, value: str) -> Node:
        return self.new_node(literal(value))

    # -- unification -------------------------------------------------------

    def _refine(self, n: Node, t: str) -> Node:
        n = deref(n)
        meet = self.hierarchy.glb(n.type, t)
        if meet is None:
            raise UnificationFailure(f"{n.type} and {t} are incompatible")
        if meet != n.type:
            self._set(n, "type", meet)
            self._restrict_features(n)
            self._queue.append(("wake", n))
        return n

    def _restrict_features(self, n: Node) -> None:
        if not n.dag:
            return
        h = self.hierarchy
        for f, v in list(n.dag.items()):
            r = h.restriction(n.type, f)
            if r is None:
                raise UnificationFailure(f"feature {f} not appropriate for {n.type}")
            self._refine(v, r)

    def _unify(self, a: Node, b: Node) -> Node:
        a, b = deref(a), deref(b)
        if a is b:
            return a
        meet = self.hierarchy.glb(a.type, b.type)
        if meet is None:
            raise UnificationFailure(f"{a.type} and {b.type} are incompatible")
        self._set(b, "forward", a)
        retyped = meet != a.type
        if retyped:
            self._set(a, "type", meet)
        pending: list[tuple[Node, Node]] = []
        if b.dag:
            merged = dict(a.dag) if a.dag else {}
            for f, bv in b.dag.items():
                if f in merged:
                    pending.append((merged[f], bv))
                else:
                    merged[f] = bv
            self._set(a, "dag", merged)
        if retyped or (b.dag and a.type != b.type):
            self._restrict_features(a)
        if b.goals:
            self._set(a, "goals", a.goals + tuple(g for g in b.goals if g not in a.goals))
        self._queue.append(("wake", a))
        for x, y in pending:
            self._unify(x, y)
        return deref(a)

    def unify(self, a: Node, b: Node) -> Node | None:
        """Unify two nodes; None on failure, leaving the store unchanged."""
        return self._attempt(self._unify, a, b)

    def _feature(self, n: Node, f: str) -> Node:
        n = deref(n)
        if n.dag is not None and f in n.dag:
            return n.dag[f]
        r = self.hierarchy.restriction(n.type, f)
        if r is None:
            # a feature introduced lower down specializes the node
            carrier = self.hierarchy.feature_carrier(n.type, f)
            if carrier is None:
                raise UnificationFailure(f"feature {f} not appropriate for {n.type}")
            n = self._refine(n, carrier)
            if n.dag is not None and f in n.dag:
                return n.dag[f]
            r = self.hierarchy.restriction(n.type, f)
        v = self._new_node(r)
        d = dict(n.dag) if n.dag else {}
        d[f] = v
        self._set(n, "dag", d)
        self._queue.append(("wake", n))
        return v

    def _path_get(self, n: Node, path: Path) -> Node:
        for f in path:
            n = self._feature(n, f)
        return deref(n)

    def path_get(self, n: Node, path: str | Sequence[str]) -> Node | None:
        return self._attempt(self._path_get, n, parse_path(path))

    def _path_put(self, n: Node, path: Path, v: Node | str) -> Node:
        target = self._path_get(n, path)
        if isinstance(v, Node):
            return self._unify(target, v)
        return self._refine(target, v)

    def path_put(self, n: Node, path: str | Sequence[str], v: Node | str) -> bool:
        """Unify the value at ``path`` with ``v`` (a node or a type name)."""
        return self._attempt(self._path_put, n, parse_path(path), v) is not None

    def restrict(self, n: Node, t: str) -> bool:
        return self._attempt(self._refine, n, t) is not None

    # -- agenda ------------------------------------------------------------

    def _drain(self) -> None:
        q = self._queue
        system = self.system
        while q:
            kind, n = q.popleft()
            if system is None:
                continue
            if kind == "license":
                system.license(self, n)
            else:
                system.wake(self, n)

    def run(self, fn, *args) -> bool:
        """Run ``fn(*args)`` as one transaction; False (and no effects) on failure."""
        try:
            self._transaction(fn, *args)
        except UnificationFailure:
            return False
        return True

    def agenda(self) -> list:
        """Delayed goals that are currently registered and not yet decided."""
        return [g for g in self.goals if g.live and not g.done]

    def delayed(self, n: Node) -> list:
        return [g for g in deref(n).goals if not g.done]

    def solutions(self, label: bool = False, max_labels: int = 64) -> Iterator[None]:
        """Enumerate solutions of pending nondeterministic goals.

        Yields with the store holding one solution; state is restored when
        the generator is resumed or closed.  With ``label`` set, delayed
        relational goals are resolved by splitting their watched node into
        its immediate subtypes, at most ``max_labels`` splits deep; deeper
        branches are cut and ``truncated`` is set.
        """
        self.truncated = False
        return self._solutions(label, max_labels)

    def _solutions(self, label: bool, budget: int) -> Iterator[None]:
        if self.choices:
            goal = self.choices[0]
            cp = self.checkpoint()
            self._set(self, "choices", self.choices[1:])
            try:
                for _ in goal.alternatives(self):
                    yield from self._solutions(label, budget)
            finally:
                self.undo_to(cp)
                self.release(cp)
            return
        if label:
            for g in self.agenda():
                if not g.labelable:
                    continue
                watch = g.watch_node(self)
                # splitting top would enumerate the whole hierarchy
                if watch is None or watch.type == TOP:
                    continue
                kids = self.hierarchy.children(watch.type)
                if not kids:
                    continue
                if budget <= 0:
                    self.truncated = True
                    return
                for k in kids:
                    cp = self.checkpoint()
                    try:
                        if self.restrict(watch, k):
                            yield from self._solutions(label, budget - 1)
                    finally:
                        self.undo_to(cp)
                        self.release(cp)
                return
        yield

    # -- building and extraction ----------------------------------------

    def build(self, fs: Frozen) -> Node:
        """Instantiate a frozen structure in this store (type-checked)."""
        def go():
            made = [self._new_node(t) for t in fs.types]
            for i, edges in enumerate(fs.edges):
                for f, j in edges:
                    self._unify(self._feature(made[i], f), made[j])
            return made[0]
        n = self._attempt(go)
        if n is None:
            raise UnificationFailure("structure is not well-typed or not licensed")
        return deref(n)

    def extract(self, n: Node, prune: bool = True) -> Frozen:
        return freeze(self.hierarchy, n, prune=prune)

    def subsumes(self, a: Node, b: Node) -> bool:
        return subsumes(self.hierarchy, self.extract(a), self.extract(b))

    def snapshot(self, upto: int | None = None) -> list[tuple]:
        """Raw state of every node, for deep-equality checks around undo."""
        nodes = self.nodes if upto is None else self.nodes[:upto]
        out = []
        for n in nodes:
            dag = None if n.dag is None else tuple((f, v.id) for f, v in n.dag.items())
            fwd = None if n.forward is None else n.forward.id
            out.append((n.id, n.type, dag, tuple(id(g) for g in n.goals), fwd))
        return out

    def is_well_typed(self, n: Node) -> bool:
        h = self.hierarchy
        seen = set()
        stack = [deref(n)]
        while stack:
            x = stack.pop()
            if x.id in seen:
                continue
            seen.add(x.id)
            for f, v in (x.dag or {}).items():
                r = h.restriction(x.type, f)
                v = deref(v)
                if r is None or not h.subtype(v.type, r):
                    return False
                stack.append(v)
        return True


# -- frozen structures ---------------------------------------------------


@dataclass(frozen=True)
class Frozen:
    """Canonical, store-independent copy of a feature structure.

    Node 0 is the root; nodes are numbered in depth-first order following
    the hierarchy's feature order, so two structures are isomorphic iff
    their ``Frozen`` values are equal.
    """

    types: tuple[str, ...]
    edges: tuple[tuple[tuple[str, int], ...], ...]

    @property
    def root_type(self) -> str:
        return self.types[0]

    def follow(self, path: str | Sequence[str]) -> int | None:
        i = 0
        for f in parse_path(path):
            d = dict(self.edges[i])
            if f not in d:
                return None
            i = d[f]
        return i

    def type_at(self, path: str | Sequence[str]) -> str | None:
        i = self.follow(path)
        return None if i is None else self.types[i]

    def sub(self, path: str | Sequence[str], hierarchy: TypeHierarchy | None = None) -> Frozen:
        """The substructure rooted at ``path`` (re-canonicalized)."""
        i = self.follow(path)
        if i is None:
            raise KeyError(path)
        return _canonical(self.types, self.edges, i, hierarchy)

    def indegree(self) -> list[int]:
        deg = [0] * len(self.types)
        for edges in self.edges:
            for _, j in edges:
                deg[j] += 1
        return deg


def _feature_order(hierarchy: TypeHierarchy | None, t: str, feats: Iterable[str]) -> list[str]:
    feats = list(feats)
    if hierarchy is None or not hierarchy.is_type(t):
        return sorted(feats)
    order = list(hierarchy.appropriate_features(t))
    return sorted(feats, key=lambda f: (order.index(f) if f in order else len(order), f))


def _canonical(types, edges, root, hierarchy) -> Frozen:
    ids: dict[int, int] = {}
    out_types: list[str] = []
    out_edges: list[list[tuple[str, int]]] = []
    emap = [dict(e) for e in edges]

    def visit(i: int) -> int:
        if i in ids:
            return ids[i]
        k = ids[i] = len(out_types)
        out_types.append(types[i])
        out_edges.append([])
        for f in _feature_order(hierarchy, types[i], emap[i]):
            out_edges[k].append((f, visit(emap[i][f])))
        return k

    visit(root)
    return Frozen(tuple(out_types), tuple(tuple(e) for e in out_edges))


def freeze(hierarchy: TypeHierarchy, n: Node, prune: bool = True) -> Frozen:
    """Copy the structure under ``n``.

    With ``prune``, feature values that carry no information beyond the
    appropriateness restriction (unshared, maximally general, no features)
    are dropped, which makes lazy and eager instantiation indistinguishable.
    """
    root = deref(n)
    index: dict[int, int] = {}
    nodes: list[Node] = []
    stack = [root]
    while stack:
        x = stack.pop()
        if x.id in index:
            continue
        index[x.id] = len(nodes)
        nodes.append(x)
        for v in (x.dag or {}).values():
            stack.append(deref(v))
    types = [x.type for x in nodes]
    edges = [[(f, index[deref(v).id]) for f, v in (x.dag or {}).items()] for x in nodes]
    if prune:
        deg = [0] * len(nodes)
        for e in edges:
            for _, j in e:
                deg[j] += 1
        memo: dict[int, bool] = {}

        def informative(j: int, restriction: str) -> bool:
            key = j
            if key not in memo:
                memo[key] = (deg[j] > 1 or types[j] != restriction
                             or any(informative(k, hierarchy.restriction(types[j], f) or TOP)
                                    for f, k in edges[j]))
            return memo[key]

        edges = [[(f, j) for f, j in e
                  if informative(j, hierarchy.restriction(types[i], f) or TOP)]
                 for i, e in enumerate(edges)]
    return _canonical(types, edges, 0, hierarchy)


def subsumes(hierarchy: TypeHierarchy, a: Frozen, b: Frozen) -> bool:
    """True iff ``b`` carries all type, feature and sharing information of ``a``."""
    amap = [dict(e) for e in a.edges]
    bmap = [dict(e) for e in b.edges]
    image: dict[int, object] = {}
    virtual = itertools.count()

    def walk(i: int, j, jtype: str) -> bool:
        # j is a node index of b, or a fresh virtual marker for a missing value
        if i in image:
            return image[i] == j
        image[i] = j
        if not hierarchy.subtype(jtype, a.types[i]):
            return False
        for f, k in amap[i].items():
            if isinstance(j, int) and f in bmap[j]:
                jj = bmap[j][f]
                if not walk(k, jj, b.types[jj]):
                    return False
            else:
                r = hierarchy.restriction(jtype, f)
                if r is None:
                    return False
                if not walk(k, ("v", next(virtual)), r):
                    return False
        return True

    return walk(0, 0, b.types[0])


# -- rendering -----------------------------------------------------------


def _tags(fs: Frozen) -> dict[int, int]:
    deg = fs.indegree()
    tags: dict[int, int] = {}
    order: list[int] = []
    seen = set()

    def visit(i: int) -> None:
        if deg[i] > 1 and i not in tags:
            tags[i] = len(tags) + 1
        if i in seen:
            return
        seen.add(i)
        order.append(i)
        for _, j in fs.edges[i]:
            visit(j)

    visit(0)
    return tags


def _show_type(t: str) -> str:
    return t


def format_avm(fs: Frozen) -> str:
    """Indented attribute-value matrix with numbered coreference tags."""
    tags = _tags(fs)
    printed: set[int] = set()
    lines: list[str] = []

    def render(i: int, indent: int, prefix: str) -> None:
        tag = f"<{tags[i]}> " if i in tags else ""
        if i in printed:
            lines.append(" " * indent + prefix + tag.rstrip())
            return
        printed.add(i)
        lines.append(" " * indent + prefix + tag + _show_type(fs.types[i]))
        edges = fs.edges[i]
        if not edges:
            return
        width = max(len(f) for f, _ in edges)
        inner = indent + len(prefix) + len(tag)
        for k, (f, j) in enumerate(edges):
            opener = "[ " if k == 0 else "  "
            label = opener + f.ljust(width) + " "
            render(j, inner, label)
        lines[-1] += " ]"

    render(0, 0, "")
    return "\n".join(lines)


def format_term(fs: Frozen) -> str:
    """Concrete syntax accepted by the grammar/lexicon readers."""
    tags = _tags(fs)
    printed: set[int] = set()

    def atom(t: str) -> str:
        if is_literal(t):
            return json.dumps(t[1:-1], ensure_ascii=False)
        if t.replace("_", "a").isalnum() and not t[0].isupper():
            return t
        return "'" + t.replace("'", "\\'") + "'"

    def render(i: int) -> str:
        tag = f"#{tags[i]}" if i in tags else ""
        if i in printed:
            return tag
        printed.add(i)
        body = atom(fs.types[i])
        if fs.edges[i]:
            body += " [" + ", ".join(f"{f}: {render(j)}" for f, j in fs.edges[i]) + "]"
        return f"{tag} {body}" if tag else body

    return render(0)


def to_json(fs: Frozen) -> dict:
    return {
        "root": 0,
        "nodes": [
            {"id": i, "type": t, "features": {f: j for f, j in fs.edges[i]}}
            for i, t in enumerate(fs.types)
        ],
    }


def from_json(data: dict, hierarchy: TypeHierarchy | None = None) -> Frozen:
    nodes = {int(n["id"]): n for n in data["nodes"]}
    ids = sorted(nodes)
    pos = {nid: k for k, nid in enumerate(ids)}
    types = [nodes[nid]["type"] for nid in ids]
    edges = [[(f, pos[int(j)]) for f, j in nodes[nid].get("features", {}).items()] for nid in ids]
    return _canonical(types, edges, pos[int(data.get("root", ids[0]))], hierarchy)
