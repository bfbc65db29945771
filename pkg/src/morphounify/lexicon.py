"""Morph lexicon (a trie over lexical strings) and lexeme lexicon.

Both are read from files of attribute-value terms::

    morph "rAt" : marg [stem: "rat", mhead: verb_stem [umlaut: aou_umlaut]].
    lexeme "rat" : lexeme [subcat: <np, np>, content: guess_rel].

Every entry is built in a store, so it is type-checked and licensed by
the grammar's principles before it is accepted.  A stem's ``mstring``
and a functor's ``affix`` default to the entry key.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator
from dataclasses import dataclass

from .feature_structures import Frozen, Store, UnificationFailure, _canonical, format_term, freeze
from .syntax import Entry, ParseError, Term, parse_entries
from .type_system import TOP, TypeHierarchy, is_literal, literal, literal_value

ACCEPT = "<accept>"


class LexiconError(ValueError):
    pass


# -- terms to structures ---------------------------------------------------


def term_to_frozen(term: Term, hierarchy: TypeHierarchy, root: str = TOP) -> Frozen:
    """Raw structure for ``term``; untyped values take their restriction.

    The result is not yet checked; build it in a store for that.
    """
    types: list[str] = []
    edges: list[list[tuple[str, int]]] = []
    tagged: dict[int, int] = {}

    def fresh(t: str) -> int:
        types.append(t)
        edges.append([])
        return len(types) - 1

    def add(i: int, f: str, j: int) -> None:
        if any(g == f for g, _ in edges[i]):
            raise LexiconError(f"feature {f} given twice")
        edges[i].append((f, j))

    def restriction_of(i: int, f: str) -> str:
        r = hierarchy.restriction(types[i], f)
        if r is None:
            # as in the store, a feature introduced lower down specializes the node
            carrier = hierarchy.feature_carrier(types[i], f)
            if carrier is None:
                raise LexiconError(f"feature {f} is not appropriate for {types[i]}")
            types[i] = carrier
            r = hierarchy.restriction(carrier, f)
        return r

    def visit(t: Term, default: str) -> int:
        if t.tag is not None and t.tag in tagged:
            i = tagged[t.tag]
            if t.type is None and not t.feats and t.items is None:
                return i
            # a tag repeated with content describes the same node
            return _merge_into(i, visit(Term(t.type, t.feats, None, t.items), default))
        if t.items is not None:
            i = _list(t.items)
        else:
            ty = t.type if t.type is not None else default
            hierarchy.check(ty)
            i = fresh(ty)
        if t.tag is not None:
            tagged[t.tag] = i
        for path, sub in t.feats:
            cur = i
            for f in path[:-1]:
                existing = dict(edges[cur]).get(f)
                if existing is None:
                    existing = fresh(restriction_of(cur, f))
                    add(cur, f, existing)
                cur = existing
            f = path[-1]
            j = visit(sub, restriction_of(cur, f))
            add(cur, f, j)
        return i

    def _list(items: list[Term]) -> int:
        if not items:
            return fresh("elist")
        head = fresh("nelist")
        cur = head
        for k, item in enumerate(items):
            add(cur, "first", visit(item, hierarchy.restriction("nelist", "first") or TOP))
            nxt = fresh("nelist" if k + 1 < len(items) else "elist")
            add(cur, "rest", nxt)
            cur = nxt
        return head

    def _merge_into(i: int, j: int) -> int:
        meet = hierarchy.glb(types[i], types[j])
        if meet is None:
            raise LexiconError(f"tag describes both {types[i]} and {types[j]}")
        types[i] = meet
        for f, k in edges[j]:
            add(i, f, k)
        edges[j] = []
        return i

    visit(term, root)
    # canonicalizing also drops nodes orphaned by tag merges
    return _canonical(types, edges, 0, hierarchy)


def is_acyclic(fs: Frozen) -> bool:
    state = [0] * len(fs.types)   # 0 new, 1 on stack, 2 done

    def visit(i: int) -> bool:
        if state[i] == 1:
            return False
        if state[i] == 2:
            return True
        state[i] = 1
        ok = all(visit(j) for _, j in fs.edges[i])
        state[i] = 2
        return ok

    return visit(0)


def build_entry(store: Store, term: Term, root: str,
                defaults: Iterable[tuple[str, str]] = ()) -> Frozen:
    """Check ``term`` against the hierarchy and principles; return it frozen."""
    h = store.hierarchy
    try:
        raw = term_to_frozen(term, h, root)
    except (LexiconError, ValueError) as exc:
        raise LexiconError(str(exc)) from None
    if not is_acyclic(raw):
        raise LexiconError("cyclic structures are not allowed")
    if not h.subtype(raw.root_type, root):
        raise LexiconError(f"entry of type {raw.root_type} is not a {root}")
    cp = store.checkpoint()
    try:
        try:
            n = store.build(raw)
        except UnificationFailure as exc:
            raise LexiconError(f"ill-typed or unlicensed entry: {exc}") from None
        for path, value in defaults:
            if not store.path_put(n, path, value):
                raise LexiconError(f"{path} conflicts with {value}")
        return freeze(h, n)
    finally:
        store.undo_to(cp)
        store.release(cp)


# -- morph lexicon -----------------------------------------------------------


@dataclass(frozen=True)
class MorphEntry:
    key: str
    fs: Frozen
    index: int
    line: int = 0

    @property
    def kind(self) -> str:
        return self.fs.root_type

    @property
    def stem(self) -> str | None:
        t = self.fs.type_at("stem")
        return literal_value(t) if t is not None and is_literal(t) else None


class _TrieNode:
    __slots__ = ("children", "entries")

    def __init__(self) -> None:
        self.children: dict[str, _TrieNode] = {}
        self.entries: list[MorphEntry] = []


class MorphTrie:
    """Lexical strings of all morphs, with their entries at accepting nodes."""

    ACCEPT = ACCEPT

    def __init__(self) -> None:
        self.root = _TrieNode()
        self._cont: dict[str, frozenset[str]] = {}
        self.entries: list[MorphEntry] = []

    def insert(self, entry: MorphEntry) -> None:
        node = self.root
        for c in entry.key:
            node = node.children.setdefault(c, _TrieNode())
        node.entries.append(entry)
        self.entries.append(entry)
        self._cont.clear()

    def _node(self, prefix: str) -> _TrieNode | None:
        node = self.root
        for c in prefix:
            node = node.children.get(c)
            if node is None:
                return None
        return node

    def continuations(self, prefix: str) -> frozenset[str]:
        """Characters that extend ``prefix`` towards a morph, plus ACCEPT."""
        try:
            return self._cont[prefix]
        except KeyError:
            pass
        node = self._node(prefix)
        if node is None:
            out = frozenset()
        else:
            out = frozenset(node.children) | ({ACCEPT} if node.entries else frozenset())
        self._cont[prefix] = out
        return out

    def lookup(self, s: str) -> list[MorphEntry]:
        node = self._node(s)
        return list(node.entries) if node else []

    def accepts(self, s: str) -> bool:
        return bool(self.lookup(s))

    def strings(self) -> list[str]:
        return list(dict.fromkeys(e.key for e in self.entries))

    def __iter__(self) -> Iterator[MorphEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def _entries(text: str, kind: str, source: str | None) -> list[Entry]:
    entries = parse_entries(text, source)
    for e in entries:
        if e.kind != kind:
            raise LexiconError(f"{source or 'line'} {e.line}: expected {kind} entries, found {e.kind}")
    return entries


def load_morph_lexicon(text: str, store: Store, alphabet=None,
                       source: str | None = None) -> MorphTrie:
    """Parse and check morph entries.  ``store`` supplies hierarchy and principles."""
    h = store.hierarchy
    trie = MorphTrie()
    for k, e in enumerate(_entries(text, "morph", source)):
        where = f"{source + ':' if source else 'line '}{e.line}"
        if not e.key:
            raise LexiconError(f"{where}: empty morph")
        if alphabet is not None:
            try:
                alphabet.check_lexical(e.key)
            except ValueError as exc:
                raise LexiconError(f"{where}: {exc}") from None
        t = e.term.type
        defaults = []
        if t is not None and h.is_type(t) and h.subtype(t, "mfunctor"):
            defaults.append(("affix", literal(e.key)))
        else:
            defaults.append(("mstring", literal(e.key)))
        try:
            fs = build_entry(store, e.term, "msign", defaults)
        except LexiconError as exc:
            raise LexiconError(f"{where}: morph {e.key!r}: {exc}") from None
        trie.insert(MorphEntry(e.key, fs, k, e.line))
    return trie


def dump_morph_lexicon(trie: MorphTrie) -> str:
    return "".join(f"morph {_quote(e.key)} : {format_term(e.fs)}.\n" for e in trie)


# -- lexeme lexicon ----------------------------------------------------------


@dataclass(frozen=True)
class LexemeEntry:
    stem: str
    fs: Frozen
    index: int
    line: int = 0


class LexemeLexicon:
    def __init__(self, entries: Iterable[LexemeEntry] = ()):
        self.entries: list[LexemeEntry] = []
        self._by_stem: dict[str, list[LexemeEntry]] = {}
        for e in entries:
            self.add(e)

    def add(self, e: LexemeEntry) -> None:
        readings = self._by_stem.setdefault(e.stem, [])
        if any(r.fs == e.fs for r in readings):
            raise LexiconError(f"duplicate reading for lexeme {e.stem!r}")
        readings.append(e)
        self.entries.append(e)

    def lookup(self, stem: str) -> list[LexemeEntry]:
        return list(self._by_stem.get(stem, ()))

    def stems(self) -> list[str]:
        return list(self._by_stem)

    def __len__(self) -> int:
        return len(self.entries)


def lookup_lexeme(lexicon: LexemeLexicon, stem: str) -> list[LexemeEntry]:
    return lexicon.lookup(stem)


def load_lexemes(text: str, store: Store, source: str | None = None) -> LexemeLexicon:
    lex = LexemeLexicon()
    for k, e in enumerate(_entries(text, "lexeme", source)):
        where = f"{source + ':' if source else 'line '}{e.line}"
        try:
            fs = build_entry(store, e.term, "lexeme")
            lex.add(LexemeEntry(e.key, fs, k, e.line))
        except LexiconError as exc:
            raise LexiconError(f"{where}: lexeme {e.key!r}: {exc}") from None
    return lex


def dump_lexemes(lexicon: LexemeLexicon) -> str:
    return "".join(f"lexeme {_quote(e.stem)} : {format_term(e.fs)}.\n" for e in lexicon.entries)


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


__all__ = [
    "ACCEPT", "LexemeEntry", "LexemeLexicon", "LexiconError", "MorphEntry", "MorphTrie",
    "ParseError", "build_entry", "dump_lexemes", "dump_morph_lexicon", "is_acyclic",
    "load_lexemes", "load_morph_lexicon", "lookup_lexeme", "term_to_frozen",
]
