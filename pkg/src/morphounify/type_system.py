"""Type hierarchy with appropriateness conditions.

Types form a DAG rooted at ``top``.  Each type declares the features it
introduces together with a value restriction; subtypes inherit every
feature, possibly with a more specific restriction.  Meets are
closed-world: if two types have no common subtype the meet fails, and if
they have several incomparable maximal common subtypes an
:class:`AmbiguousMeet` is raised instead of inventing a meet type.

String values (``"rAt"``) are not declared individually.  Any name that
starts with a double quote is a string literal, an atomic subtype of
``string``.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping

TOP = "top"
STRING = "string"


class TypeSystemError(Exception):
    """Base class for hierarchy declaration and lookup errors."""


class UnknownType(TypeSystemError):
    pass


class HierarchyError(TypeSystemError):
    pass


class AppropriatenessConflict(TypeSystemError):
    pass


class AmbiguousMeet(TypeSystemError):
    def __init__(self, t1: str, t2: str, candidates: Iterable[str]):
        self.candidates = tuple(sorted(candidates))
        super().__init__(f"ambiguous meet of {t1} and {t2}: {', '.join(self.candidates)}")


def is_literal(t: str) -> bool:
    return t.startswith('"')


def literal(value: str) -> str:
    """Type name of the string literal ``value``."""
    return '"' + value + '"'


def literal_value(t: str) -> str:
    return t[1:-1]


class TypeHierarchy:
    """Partial order of types with inherited appropriateness."""

    def __init__(self) -> None:
        self._parents: dict[str, tuple[str, ...]] = {TOP: ()}
        self._children: dict[str, list[str]] = {TOP: []}
        self._declared: dict[str, dict[str, str]] = {TOP: {}}
        self._features: dict[str, dict[str, str]] = {TOP: {}}
        self._ancestors: dict[str, frozenset[str]] = {TOP: frozenset([TOP])}
        self._descendants: dict[str, set[str]] = {TOP: {TOP}}
        self._glb_cache: dict[tuple[str, str], str | None] = {}
        self._introduced_below: dict[str, frozenset[str]] | None = None

    # -- declaration -----------------------------------------------------

    def declare_type(self, name: str, parents: Iterable[str] = (TOP,),
                     features: Mapping[str, str] | None = None) -> str:
        parents = tuple(parents) or (TOP,)
        features = dict(features or {})
        if name in self._parents:
            if name in parents:
                raise HierarchyError(f"cycle: {name} cannot be its own parent")
            raise HierarchyError(f"type {name} already declared")
        if is_literal(name):
            raise HierarchyError(f"string literal {name} cannot be declared as a type")
        for p in parents:
            if p == name:
                raise HierarchyError(f"cycle: {name} cannot be its own parent")
            if p not in self._parents:
                raise UnknownType(f"unknown parent type {p} of {name}")
            if is_literal(p):
                raise HierarchyError(f"cannot subtype string literal {p}")
        merged = self._merge_features(name, parents, features)

        self._parents[name] = parents
        self._children[name] = []
        self._declared[name] = features
        self._features[name] = merged
        anc = frozenset([name]).union(*(self._ancestors[p] for p in parents))
        self._ancestors[name] = anc
        self._descendants[name] = {name}
        for a in anc:
            self._descendants[a].add(name)
        for p in parents:
            self._children[p].append(name)
        self._glb_cache.clear()
        self._introduced_below = None
        return name

    def _merge_features(self, name: str, parents: tuple[str, ...],
                        declared: Mapping[str, str]) -> dict[str, str]:
        merged: dict[str, str] = {}
        sources = [self._features[p] for p in parents] + [dict(declared)]
        for feats in sources:
            for f, v in feats.items():
                if f not in merged:
                    merged[f] = v
                    continue
                old = merged[f]
                if old in self._parents and v in self._parents:
                    meet = self.glb(old, v)
                    if meet is None:
                        raise AppropriatenessConflict(
                            f"feature {f} of {name}: restriction {v} conflicts with {old}")
                    merged[f] = meet
                else:
                    # forward reference; settled by finalize()
                    merged[f] = v if old == TOP else old
        return merged

    def finalize(self) -> None:
        """Re-check value restrictions once every type is declared."""
        for t in self.types():
            for f, v in self._declared[t].items():
                if not self.is_type(v):
                    raise UnknownType(f"feature {f} of {t} restricted to unknown type {v}")
        for t in self.topological():
            self._features[t] = self._merge_features(t, self._parents[t], self._declared[t])
        self._glb_cache.clear()
        self._introduced_below = None

    # -- queries ---------------------------------------------------------

    def types(self) -> list[str]:
        return list(self._parents)

    def topological(self) -> list[str]:
        # declaration order is topological: parents precede children
        return list(self._parents)

    def is_type(self, t: str) -> bool:
        return t in self._parents or is_literal(t)

    def check(self, t: str) -> str:
        if not self.is_type(t):
            raise UnknownType(f"unknown type {t}")
        return t

    def parents(self, t: str) -> tuple[str, ...]:
        if is_literal(t):
            return (STRING,)
        self.check(t)
        return self._parents[t]

    def children(self, t: str) -> list[str]:
        if is_literal(t):
            return []
        self.check(t)
        return list(self._children[t])

    def subtype(self, sub: str, sup: str) -> bool:
        """True iff ``sub`` is equal to or more specific than ``sup``."""
        if sub == sup:
            return True
        if is_literal(sub):
            if is_literal(sup):
                return False
            return STRING in self._parents and self.subtype(STRING, sup)
        if is_literal(sup):
            return False
        try:
            return sup in self._ancestors[sub]
        except KeyError:
            raise UnknownType(f"unknown type {sub}") from None

    def descendants(self, t: str) -> set[str]:
        """Declared subtypes of ``t`` including itself (literals excluded)."""
        if is_literal(t):
            return {t}
        self.check(t)
        return set(self._descendants[t])

    def glb(self, t1: str, t2: str) -> str | None:
        """Greatest lower bound, or None when the types are incompatible."""
        if t1 == t2:
            return self.check(t1)
        key = (t1, t2) if t1 < t2 else (t2, t1)
        try:
            return self._glb_cache[key]
        except KeyError:
            pass
        if is_literal(t1) or is_literal(t2):
            lit, other = (t1, t2) if is_literal(t1) else (t2, t1)
            self.check(other)
            result = lit if self.subtype(lit, other) else None
        else:
            self.check(t1)
            self.check(t2)
            if t2 in self._ancestors[t1]:
                result = t1
            elif t1 in self._ancestors[t2]:
                result = t2
            else:
                common = self._descendants[t1] & self._descendants[t2]
                maximal = [c for c in common
                           if not any(c != d and d in self._ancestors[c] for d in common)]
                if len(maximal) > 1:
                    raise AmbiguousMeet(t1, t2, maximal)
                result = maximal[0] if maximal else None
        self._glb_cache[key] = result
        return result

    def appropriate_features(self, t: str) -> dict[str, str]:
        if is_literal(t):
            return {}
        self.check(t)
        return dict(self._features[t])

    def restriction(self, t: str, feature: str) -> str | None:
        """Value restriction of ``feature`` on ``t``; None if inappropriate."""
        if is_literal(t):
            return None
        return self._features[t].get(feature)

    def introduced_below(self, t: str) -> frozenset[str]:
        """Features appropriate for ``t`` or for at least one of its subtypes."""
        if self._introduced_below is None:
            table = {}
            for s in self._parents:
                feats = set()
                for d in self._descendants[s]:
                    feats.update(self._features[d])
                table[s] = frozenset(feats)
            self._introduced_below = table
        if is_literal(t):
            return frozenset()
        return self._introduced_below[t]

    def feature_carrier(self, t: str, feature: str) -> str | None:
        """Most general subtype of ``t`` on which ``feature`` is appropriate.

        None when no subtype carries it or when several incomparable ones do.
        """
        if is_literal(t):
            return None
        self.check(t)
        if feature in self._features[t]:
            return t
        if feature not in self.introduced_below(t):
            return None
        carriers = [d for d in self._descendants[t] if feature in self._features[d]]
        top = [c for c in carriers
               if not any(c != d and d in self._ancestors[c] for d in carriers)]
        return top[0] if len(top) == 1 else None

    def ambiguous_meets(self) -> list[AmbiguousMeet]:
        """All pairs of declared types whose meet is ambiguous."""
        problems = []
        names = self.types()
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                try:
                    self.glb(a, b)
                except AmbiguousMeet as exc:
                    problems.append(exc)
        return problems

    def __contains__(self, t: str) -> bool:
        return self.is_type(t)

    def __len__(self) -> int:
        return len(self._parents)
