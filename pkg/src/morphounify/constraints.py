"""Conditional constraints with delayed evaluation.

A conditional constraint ``name(X, ...) := Antecedent ==> Body`` has an
antecedent made only of typing requirements.  Checking it against the
current store gives one of three verdicts:

* satisfied: every requirement already holds, so the body is run;
* incompatible: some requirement can never hold, so it is dropped;
* undetermined: the goal is parked on the node that blocks the decision
  and re-checked whenever that node is refined, merged or extended.

Unary constraints whose antecedent types the argument itself
(``X::=headed_phrase``) are principles: every node of a compatible type
is licensed by them.  All other definitions are relations, invoked from
constraint bodies.  ``concat`` and ``morphology`` are built in;
``fs_append`` is defined in constraint syntax (:data:`PRELUDE`).
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .feature_structures import (
    EngineError,
    Node,
    Store,
    UnificationFailure,
    deref,
)
from .syntax import Call, Clause, PathEq, Requirement, VarEq, parse_grammar
from .type_system import STRING, TOP, AmbiguousMeet, TypeHierarchy, is_literal, literal, literal_value

SATISFIED = "satisfied"
INCOMPATIBLE = "incompatible"
UNDETERMINED = "undetermined"

PRELUDE = """
% list append over first/rest lists; the typing antecedents keep the
% recursion delayed until the first list is known to be empty or not
fs_append(X,Y,Z) := X::=list, Y::=list, Z::=list,
    fs_empty_append(X,Y,Z), fs_nonempty_append(X,Y,Z).
fs_empty_append(X,Y,Z) := X::=elist ==> Y = Z.
fs_nonempty_append(X,Y,Z) := X::=nelist
  ==> X::first===F, Z::first===F,
      X::rest===XRest, Z::rest===ZRest,
      fs_append(XRest,Y,ZRest).
"""

BUILTINS = {"concat": 3, "morphology": 3}


class ConstraintError(Exception):
    """Ill-formed constraint definitions."""


@dataclass
class ConditionalConstraint:
    id: int
    name: str
    params: tuple[str, ...]
    antecedent: tuple[Requirement, ...] | None
    equations: tuple = ()
    calls: tuple[Call, ...] = ()
    anchor: str | None = None

    @property
    def is_principle(self) -> bool:
        return self.anchor is not None


# -- goals ---------------------------------------------------------------


class Goal:
    name = "goal"
    labelable = False

    def __init__(self) -> None:
        self.done = False
        self.live = False
        self.listed = False

    def check(self, store: Store) -> tuple[str, list[Node]]:
        raise NotImplementedError

    def fire(self, store: Store) -> None:
        raise NotImplementedError

    def watch_node(self, store: Store) -> Node | None:
        verdict, watch = self.check(store)
        return watch[0] if verdict == UNDETERMINED and watch else None

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class ClauseGoal(Goal):
    def __init__(self, system: ConstraintSystem, constraint: ConditionalConstraint,
                 args: Sequence[Node]):
        super().__init__()
        self.system = system
        self.constraint = constraint
        self.args = tuple(args)
        self.name = constraint.name
        self.labelable = not constraint.is_principle

    def check(self, store: Store) -> tuple[str, list[Node]]:
        return check_antecedent(store.hierarchy, self.constraint, self.args)

    def fire(self, store: Store) -> None:
        self.system.run_body(store, self.constraint, self.args)


class ConcatGoal(Goal):
    """``concat(A, B, C)``: C is the string A followed by B."""

    name = "concat"

    def __init__(self, a: Node, b: Node, c: Node):
        super().__init__()
        self.args = (a, b, c)

    def check(self, store: Store) -> tuple[str, list[Node]]:
        h = store.hierarchy
        vals = [deref(x) for x in self.args]
        if any(h.glb(v.type, STRING) is None for v in vals):
            return SATISFIED, []
        ground = [is_literal(v.type) for v in vals]
        ga, gb, gc = ground
        if (ga and gb) or (gc and (ga or gb)):
            return SATISFIED, []
        return UNDETERMINED, [v for v, g in zip(vals, ground) if not g]

    def fire(self, store: Store) -> None:
        a, b, c = (deref(x) for x in self.args)
        h = store.hierarchy
        if any(h.glb(v.type, STRING) is None for v in (a, b, c)):
            raise UnificationFailure("concat over non-strings")
        if is_literal(a.type) and is_literal(b.type):
            store._refine(c, literal(literal_value(a.type) + literal_value(b.type)))
        elif is_literal(a.type):
            sa, sc = literal_value(a.type), literal_value(c.type)
            if not sc.startswith(sa):
                raise UnificationFailure(f"{sc!r} does not start with {sa!r}")
            store._refine(b, literal(sc[len(sa):]))
        else:
            sb, sc = literal_value(b.type), literal_value(c.type)
            if not sc.endswith(sb):
                raise UnificationFailure(f"{sc!r} does not end with {sb!r}")
            store._refine(a, literal(sc[:len(sc) - len(sb)]))


class MorphologyGoal(Goal):
    """``morphology(Lexical, Surface, MorphSign)``.

    Waits until either string is ground, then joins the store's choice
    agenda; the alternatives are enumerated by :meth:`Store.solutions`.
    """

    name = "morphology"

    def __init__(self, lexical: Node, surface: Node, sign: Node):
        super().__init__()
        self.args = (lexical, surface, sign)

    def check(self, store: Store) -> tuple[str, list[Node]]:
        lex, surf, _ = (deref(x) for x in self.args)
        if is_literal(lex.type) or is_literal(surf.type):
            return SATISFIED, []
        h = store.hierarchy
        if h.glb(lex.type, STRING) is None or h.glb(surf.type, STRING) is None:
            return SATISFIED, []
        return UNDETERMINED, [lex, surf]

    def fire(self, store: Store) -> None:
        store._set(store, "choices", store.choices + (self,))

    def alternatives(self, store: Store):
        relation = getattr(store.system, "morphology", None)
        if relation is None:
            raise EngineError("no morphology relation configured")
        lex, surf, sign = (deref(x) for x in self.args)
        lexical = literal_value(lex.type) if is_literal(lex.type) else None
        surface = literal_value(surf.type) if is_literal(surf.type) else None
        if lexical is None and surface is None:
            raise EngineError("morphology needs a ground lexical or surface string")
        for lex_out, surf_out in relation.solve(store, lexical, surface, sign):
            cp = store.checkpoint()
            try:
                if store.run(_bind_strings, store, self.args[0], lex_out, self.args[1], surf_out):
                    yield
            finally:
                store.undo_to(cp)
                store.release(cp)


def _bind_strings(store: Store, lex: Node, lex_value: str, surf: Node, surf_value: str) -> None:
    store._refine(lex, literal(lex_value))
    store._refine(surf, literal(surf_value))


# -- antecedent checking ---------------------------------------------------


def type_verdict(h: TypeHierarchy, t: str, required: str, strict: bool = False) -> str:
    if h.subtype(t, required) and not (strict and t == required):
        return SATISFIED
    try:
        meet = h.glb(t, required)
    except AmbiguousMeet:
        return UNDETERMINED
    if meet is None:
        return INCOMPATIBLE
    if strict and meet == required and not h.children(required) and required != STRING:
        return INCOMPATIBLE
    return UNDETERMINED


def requirement_verdict(h: TypeHierarchy, node: Node, req: Requirement) -> tuple[str, Node]:
    """Verdict of one requirement plus the node whose change could alter it.

    Walks the path without instantiating anything: a feature missing from
    a node's dag stands for a fresh value of its appropriateness type.
    """
    n: Node | None = deref(node)
    t = n.type
    watch = n
    for f in req.path:
        r = h.restriction(t, f)
        if r is None:
            if f in h.introduced_below(t):
                return UNDETERMINED, watch
            return INCOMPATIBLE, watch
        if n is not None and n.dag is not None and f in n.dag:
            n = deref(n.dag[f])
            t = n.type
            watch = n
        else:
            n = None
            t = r
    return type_verdict(h, t, req.type, req.strict), watch


def check_antecedent(h: TypeHierarchy, constraint: ConditionalConstraint,
                     args: Node | Sequence[Node]) -> tuple[str, list[Node]]:
    """Tri-state verdict of ``constraint``'s antecedent on ``args``."""
    if isinstance(args, Node):
        args = (args,)
    if constraint.antecedent is None:
        return SATISFIED, []
    env = dict(zip(constraint.params, args))
    watch: list[Node] = []
    for req in constraint.antecedent:
        verdict, w = requirement_verdict(h, env[req.var], req)
        if verdict == INCOMPATIBLE:
            return INCOMPATIBLE, []
        if verdict == UNDETERMINED and not watch:
            watch.append(w)
    if watch:
        return UNDETERMINED, watch
    return SATISFIED, []


# -- the constraint system ---------------------------------------------------


@dataclass
class ConstraintSystem:
    hierarchy: TypeHierarchy
    constraints: list[ConditionalConstraint] = field(default_factory=list)
    morphology: object = None

    def __post_init__(self) -> None:
        self.relations: dict[str, list[ConditionalConstraint]] = {}
        self.principles: list[ConditionalConstraint] = []
        self._by_type: dict[str, list[ConditionalConstraint]] = {}
        for c in list(self.constraints):
            self._index(c)

    @classmethod
    def from_clauses(cls, hierarchy: TypeHierarchy, clauses: Iterable[Clause],
                     prelude: bool = True) -> ConstraintSystem:
        clauses = list(clauses)
        names = {c.name for c in clauses}
        if prelude and {"list", "elist", "nelist"} <= set(hierarchy.types()):
            _, extra = parse_grammar(PRELUDE, "<prelude>")
            clauses = [c for c in extra if c.name not in names] + clauses
        system = cls(hierarchy)
        for i, cl in enumerate(clauses):
            system.add(compile_clause(hierarchy, cl, i))
        system.validate()
        return system

    def add(self, c: ConditionalConstraint) -> None:
        self.constraints.append(c)
        self._index(c)

    def _index(self, c: ConditionalConstraint) -> None:
        self.relations.setdefault(c.name, []).append(c)
        if c.is_principle:
            self.principles.append(c)
        self._by_type.clear()

    def validate(self) -> None:
        for c in self.constraints:
            for call in c.calls:
                if call.name in BUILTINS:
                    arity = BUILTINS[call.name]
                elif call.name in self.relations:
                    arity = len(self.relations[call.name][0].params)
                else:
                    raise ConstraintError(f"{c.name}: call to undefined relation {call.name}")
                if len(call.args) != arity:
                    raise ConstraintError(
                        f"{c.name}: {call.name} expects {arity} arguments, got {len(call.args)}")

    def principles_for(self, t: str) -> list[ConditionalConstraint]:
        try:
            return self._by_type[t]
        except KeyError:
            pass
        out = []
        for p in self.principles:
            try:
                if self.hierarchy.glb(t, p.anchor) is not None:
                    out.append(p)
            except AmbiguousMeet:
                out.append(p)
        self._by_type[t] = out
        return out

    # -- store hooks -------------------------------------------------------

    def license(self, store: Store, n: Node) -> None:
        """Apply, discard or delay every principle at ``n``."""
        n = deref(n)
        for p in self.principles_for(n.type):
            self.post(store, ClauseGoal(self, p, (n,)))

    def wake(self, store: Store, n: Node) -> None:
        """Re-examine the goals parked on ``n``."""
        n = deref(n)
        goals = n.goals
        if not goals:
            return
        store._set(n, "goals", ())
        for g in goals:
            if not g.done:
                if store.trace:
                    store.trace(f"wake {g.name} at node {n.id}")
                self.post(store, g)

    def post(self, store: Store, g: Goal) -> None:
        if not g.listed:
            store._set(g, "listed", True)
            store._append(store.goals, g)
        verdict, watch = g.check(store)
        if verdict == SATISFIED:
            store._set(g, "done", True)
            if store.trace:
                store.trace(f"fire {g.name}")
            g.fire(store)
        elif verdict == INCOMPATIBLE:
            store._set(g, "done", True)
        else:
            for w in watch:
                w = deref(w)
                if g not in w.goals:
                    store._set(w, "goals", w.goals + (g,))
            if not g.live:
                store._set(g, "live", True)

    def call(self, store: Store, name: str, args: Sequence[Node]) -> None:
        if name == "concat":
            self.post(store, ConcatGoal(*args))
        elif name == "morphology":
            self.post(store, MorphologyGoal(*args))
        else:
            for c in self.relations[name]:
                if c.antecedent is None:
                    self.run_body(store, c, args)
                else:
                    self.post(store, ClauseGoal(self, c, args))

    def run_body(self, store: Store, c: ConditionalConstraint, args: Sequence[Node]) -> None:
        env: dict[str, Node] = dict(zip(c.params, args))

        def var(name: str) -> Node:
            if name not in env:
                env[name] = store._new_node(TOP)
            return env[name]

        for eq in c.equations:
            if isinstance(eq, VarEq):
                if eq.right not in env:
                    env[eq.right] = var(eq.left)
                else:
                    store._unify(var(eq.left), env[eq.right])
                continue
            target = store._path_get(var(eq.var), eq.path)
            if not eq.is_var:
                store._refine(target, eq.value)
            elif eq.value in env:
                store._unify(target, env[eq.value])
            else:
                env[eq.value] = target
        for call in c.calls:
            self.call(store, call.name, [var(a) for a in call.args])

    # -- user-level entry points ------------------------------------------

    def invoke(self, store: Store, name: str, *args: Node) -> bool:
        """Post a relation goal as one transaction."""
        if name not in self.relations and name not in BUILTINS:
            raise ConstraintError(f"unknown relation {name}")
        return store.run(self.call, store, name, args)


def compile_clause(h: TypeHierarchy, cl: Clause, ident: int) -> ConditionalConstraint:
    for req in cl.antecedent or ():
        if req.var not in cl.params:
            raise ConstraintError(f"{cl.name}: antecedent mentions unknown variable {req.var}")
        if not h.is_type(req.type):
            raise ConstraintError(f"{cl.name}: unknown type {req.type}")
    equations = []
    calls = []
    for item in cl.body:
        if isinstance(item, Call):
            calls.append(item)
        elif isinstance(item, (PathEq, VarEq)):
            if isinstance(item, PathEq) and not item.is_var and not h.is_type(item.value):
                raise ConstraintError(f"{cl.name}: unknown type {item.value}")
            equations.append(item)
        else:
            raise ConstraintError(f"{cl.name}: unexpected body item {item!r}")
    anchor = None
    if len(cl.params) == 1 and cl.antecedent:
        for req in cl.antecedent:
            if req.var == cl.params[0] and not req.path and not req.strict:
                anchor = req.type
                break
    return ConditionalConstraint(ident, cl.name, cl.params, cl.antecedent,
                                 tuple(equations), tuple(calls), anchor)


def license(store: Store, n: Node) -> bool:
    """License ``n`` against every principle, as one transaction."""
    return store.run(store.system.license, store, n)


def wake(store: Store, n: Node) -> bool:
    return store.run(store.system.wake, store, n)


def fs_append(store: Store, x: Node, y: Node, z: Node) -> bool:
    return store.system.invoke(store, "fs_append", x, y, z)


def concat(store: Store, a: Node, b: Node, c: Node) -> bool:
    return store.system.invoke(store, "concat", a, b, c)
