"""Grammar loading and the word-level and phrase-level entry points.

A :class:`Grammar` bundles the type hierarchy, the principles and
relations, the two-level rules and both lexicons.  Words are analyzed by
giving ``phon`` a value and generated by giving ``morph`` one; the same
principles do the work in both directions.
"""

from __future__ import annotations

import itertools
import unicodedata
import warnings
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .constraints import ClauseGoal, ConstraintSystem, MorphologyGoal
from .feature_structures import (
    Frozen,
    Node,
    Store,
    UnificationFailure,
    deref,
    freeze,
    parse_path,
    subsumes,
)
from .lexicon import (
    LexemeLexicon,
    MorphEntry,
    MorphTrie,
    load_lexemes,
    load_morph_lexicon,
)
from .syntax import parse_grammar
from .twolevel import Alphabet, CompiledRuleSet, Morphology, compile_rules, parse_rules
from .type_system import STRING, TypeHierarchy, is_literal, literal, literal_value


class GrammarError(ValueError):
    """A grammar, rule or lexicon file failed to load."""


class InsufficientInstantiation(Exception):
    """Generation was asked for while the morphology constraint is still delayed."""


class UnknownStemWarning(UserWarning):
    pass


# -- word grammar ------------------------------------------------------------


@dataclass(frozen=True)
class _Composition:
    current: Node | None = None
    prefixes: tuple[Node, ...] = ()


class WordGrammar:
    """Functor-argument combination of morphs found left to right.

    Prefixes wait until the stem is found; each suffix takes the
    structure built so far as its argument.  Prefixes attach last, so a
    word prefix+stem+suffix is prefix(suffix(stem)).
    """

    def start(self, store: Store) -> _Composition:
        return _Composition()

    def add(self, store: Store, state: _Composition, entry: MorphEntry) -> _Composition | None:
        h = store.hierarchy
        kind = entry.fs.root_type
        try:
            node = store.build(entry.fs)
        except UnificationFailure:
            return None
        if h.subtype(kind, "leftfunctor"):
            if state.current is not None:
                return None
            return _Composition(None, state.prefixes + (node,))
        if h.subtype(kind, "rightfunctor"):
            if state.current is None or compose(store, node, state.current) is None:
                return None
            return _Composition(deref(node), state.prefixes)
        if h.subtype(kind, "mfunctor"):
            return None
        if state.current is not None:
            return None
        return _Composition(node, state.prefixes)

    def close(self, store: Store, state: _Composition) -> Node | None:
        """The outermost sign, once prefixes are attached."""
        if state.current is None:
            return None
        current = state.current
        for p in reversed(state.prefixes):
            if compose(store, p, current) is None:
                return None
            current = p
        return deref(current)

    def finish(self, store: Store, state: _Composition, f: Node | None) -> bool:
        sign = self.close(store, state)
        if sign is None:
            return False
        return f is None or store.unify(f, sign) is not None


def compose(store: Store, functor: Node, arg: Node) -> Node | None:
    """Put ``arg`` into the argument slot of ``functor``."""
    if not store.path_put(functor, "arg", arg):
        return None
    return deref(functor)


# -- the grammar ---------------------------------------------------------------


def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def demo_file(name: str) -> str:
    return resources.files("morphounify").joinpath("data", name).read_text(encoding="utf-8")


class Grammar:
    def __init__(self, hierarchy: TypeHierarchy, system: ConstraintSystem,
                 rules: CompiledRuleSet, morphs: MorphTrie, lexemes: LexemeLexicon,
                 max_nulls: int = 2, use_lookahead: bool = True):
        self.hierarchy = hierarchy
        self.system = system
        self.rules = rules
        self.alphabet: Alphabet = rules.alphabet
        self.morphs = morphs
        self.lexemes = lexemes
        self.word_grammar = WordGrammar()
        self.max_nulls = max_nulls
        self.morphology = Morphology(rules, morphs, self.word_grammar, max_nulls, use_lookahead)
        system.morphology = self.morphology

    # -- loading ------------------------------------------------------------

    @classmethod
    def from_texts(cls, grammar: str, rules: str, morphs: str, lexemes: str,
                   max_nulls: int = 2, use_lookahead: bool = True,
                   names: Sequence[str] = ("grammar", "rules", "morphs", "lexemes")) -> Grammar:
        h, system = load_type_grammar(grammar, names[0])
        try:
            parsed, alphabet = parse_rules(rules, h)
            compiled = compile_rules(parsed, alphabet, h)
        except ValueError as exc:
            raise GrammarError(f"{names[1]}: {exc}") from None
        store = Store(h, system)
        try:
            trie = load_morph_lexicon(morphs, store, alphabet, names[2])
            lex = load_lexemes(lexemes, store, names[3])
        except ValueError as exc:
            raise GrammarError(str(exc)) from None
        return cls(h, system, compiled, trie, lex, max_nulls, use_lookahead)

    @classmethod
    def from_files(cls, grammar, rules, morphs, lexemes, **kw) -> Grammar:
        return cls.from_texts(_read(grammar), _read(rules), _read(morphs), _read(lexemes),
                              names=(str(grammar), str(rules), str(morphs), str(lexemes)), **kw)

    @classmethod
    def demo(cls, **kw) -> Grammar:
        return cls.from_texts(*(demo_file(f"demo.{x}") for x in
                                ("grammar", "rules", "morphs", "lexemes")),
                              names=("demo.grammar", "demo.rules", "demo.morphs", "demo.lexemes"),
                              **kw)

    def store(self, trace=None) -> Store:
        return Store(self.hierarchy, self.system, trace)

    def with_morphology(self, **kw) -> Grammar:
        """A copy sharing everything but the morphology settings."""
        kw.setdefault("max_nulls", self.max_nulls)
        kw.setdefault("use_lookahead", self.morphology.use_lookahead)
        system = ConstraintSystem(self.hierarchy, list(self.system.constraints))
        return Grammar(self.hierarchy, system, self.rules, self.morphs, self.lexemes, **kw)

    # -- consistency -----------------------------------------------------------

    def problems(self) -> list[str]:
        """Issues that do not stop loading: ambiguous meets, rule conflicts,
        stems lacking a lexeme entry."""
        out = [str(e) for e in self.hierarchy.ambiguous_meets()]
        out.extend(self.rules.conflicts)
        for e in self.morphs:
            if self.hierarchy.subtype(e.kind, "marg") and e.stem is not None \
                    and not self.lexemes.lookup(e.stem):
                out.append(f"stem {e.stem!r} of morph {e.key!r} has no lexeme entry")
        return out


def load_type_grammar(text: str, source: str = "grammar") -> tuple[TypeHierarchy, ConstraintSystem]:
    """Type hierarchy and constraint system from grammar-file text."""
    try:
        decls, clauses = parse_grammar(text, source)
        h = TypeHierarchy()
        for d in decls:
            if d.name == "top":
                continue
            h.declare_type(d.name, d.parents or ["top"], d.features)
        h.finalize()
        system = ConstraintSystem.from_clauses(h, clauses)
    except ValueError as exc:
        raise GrammarError(str(exc)) from None
    except Exception as exc:
        if type(exc).__module__.startswith("morphounify"):
            raise GrammarError(f"{source}: {exc}") from None
        raise
    return h, system


def load_grammar(grammar_path, rules_path, morphs_path, lexemes_path, **kw) -> Grammar:
    return Grammar.from_files(grammar_path, rules_path, morphs_path, lexemes_path, **kw)


# -- words ---------------------------------------------------------------------


def normalize(s: str) -> str:
    return unicodedata.normalize("NFC", s)


def dedupe(structures: Iterable[Frozen], hierarchy: TypeHierarchy) -> list[Frozen]:
    """Drop structures equivalent (mutually subsuming) to an earlier one."""
    out: list[Frozen] = []
    for fs in structures:
        if any(fs == g or (subsumes(hierarchy, fs, g) and subsumes(hierarchy, g, fs))
               for g in out):
            continue
        out.append(fs)
    return out


def _stem_of(store: Store, word: Node) -> str | None:
    n = deref(word)
    for f in ("morph", "stem"):
        if n.dag is None or f not in n.dag:
            return None
        n = deref(n.dag[f])
    return literal_value(n.type) if is_literal(n.type) else None


def enrich(grammar: Grammar, store: Store, word: Node) -> Iterator[None]:
    """Add lexeme information keyed by morph|stem; one state per reading."""
    stem = _stem_of(store, word)
    readings = grammar.lexemes.lookup(stem) if stem is not None else []
    if not readings:
        warnings.warn(f"no lexeme entry for stem {stem!r}", UnknownStemWarning, stacklevel=3)
        yield
        return
    for r in readings:
        cp = store.checkpoint()
        try:
            if store.run(_add_lexeme, store, word, r.fs):
                yield
        finally:
            store.undo_to(cp)
            store.release(cp)


def _add_lexeme(store: Store, word: Node, fs: Frozen) -> None:
    lexeme = store.build(fs)
    store._unify(store._path_get(word, ("synsem", "loc", "cat", "subcat")),
                 store._path_get(lexeme, ("subcat",)))
    store._unify(store._path_get(word, ("synsem", "loc", "content")),
                 store._path_get(lexeme, ("content",)))


def analyze_word(grammar: Grammar, surface: str, enrich_lexemes: bool = True,
                 trace=None) -> list[Frozen]:
    """All word structures whose phon is ``surface``."""
    surface = normalize(surface)
    grammar.alphabet.check_surface(surface)
    store = grammar.store(trace)
    word = store.new_node("word")
    if not store.path_put(word, "phon", literal(surface)):
        return []
    results = []
    for _ in store.solutions():
        if enrich_lexemes:
            for _ in enrich(grammar, store, word):
                results.append(freeze(grammar.hierarchy, word))
        else:
            results.append(freeze(grammar.hierarchy, word))
    return dedupe(results, grammar.hierarchy)


def _morphology_delayed(store: Store) -> bool:
    return any(isinstance(g, MorphologyGoal) for g in store.agenda())


def realize(grammar: Grammar, store: Store, word: Node) -> list[str]:
    """Surface strings of ``word`` in ``store``; raises if they cannot be computed yet."""
    if _morphology_delayed(store) and not store.choices:
        raise InsufficientInstantiation("morphology constraint still delayed")
    out = []
    for _ in store.solutions():
        phon = deref(store.path_get(word, "phon"))
        if is_literal(phon.type):
            out.append(literal_value(phon.type))
    return list(dict.fromkeys(out))


def generate_word(grammar: Grammar, partial: Frozen, trace=None) -> list[str]:
    """Surface realizations of a (partial) word structure."""
    store = grammar.store(trace)
    try:
        word = store.build(partial)
    except UnificationFailure:
        return []
    if not grammar.hierarchy.subtype(word.type, "word"):
        if not store.restrict(word, "word"):
            return []
    return realize(grammar, store, word)


def compose_entries(grammar: Grammar, store: Store, entries: Sequence[MorphEntry]) -> Node | None:
    """The msign built from morphs given in surface order."""
    wg = grammar.word_grammar
    state = wg.start(store)
    for e in entries:
        state = wg.add(store, state, e)
        if state is None:
            return None
    return wg.close(store, state)


def candidate_words(grammar: Grammar, max_affixes: int = 2) -> Iterator[tuple[MorphEntry, ...]]:
    """Morph sequences (prefixes, one stem, suffixes) up to ``max_affixes`` affixes."""
    h = grammar.hierarchy
    stems = [e for e in grammar.morphs if h.subtype(e.kind, "marg")]
    lefts = [e for e in grammar.morphs if h.subtype(e.kind, "leftfunctor")]
    rights = [e for e in grammar.morphs if h.subtype(e.kind, "rightfunctor")]
    for n in range(max_affixes + 1):
        for k in range(n + 1):
            for pre in itertools.product(lefts, repeat=k):
                for suf in itertools.product(rights, repeat=n - k):
                    for s in stems:
                        yield pre + (s,) + suf


# -- feature specifications ------------------------------------------------------

_SEARCH = (("morph",), ("morph", "mhead"), ("synsem", "loc", "cat", "head"),
           ("synsem", "loc"), ())


def _path_type(h: TypeHierarchy, root: str, path: Sequence[str]) -> str | None:
    t = root
    for f in path:
        r = h.restriction(t, f)
        if r is None:
            carriers = [d for d in sorted(h.descendants(t)) if h.restriction(d, f)]
            if not carriers:
                return None
            r = h.restriction(carriers[0], f)
        t = r
    return t


def resolve_feature(h: TypeHierarchy, key: str, value: str) -> tuple[tuple[str, ...], str]:
    """Path and type for a ``key=value`` assignment on a word.

    Bare keys are looked up under morph, morph|mhead and the syntactic
    head.  Values name a type, ``key_value`` names a type (tense=pres is
    tense_pres), or become a string when the feature takes strings.
    """
    value = normalize(value)
    if ":" in key or "|" in key:
        paths = [parse_path(key)]
    else:
        paths = [p + (key,) for p in _SEARCH]
    for path in paths:
        t = _path_type(h, "word", path)
        if t is None:
            continue
        for cand in (value, f"{key.split('|')[-1].split(':')[-1]}_{value}"):
            if h.is_type(cand) and not is_literal(cand) and h.glb(cand, t) is not None:
                return path, cand
        if h.subtype(STRING, t) or t == STRING:
            return path, literal(value)
        raise ValueError(f"{value!r} is not a possible value of {key}")
    raise ValueError(f"unknown feature {key!r}")


def generate_from_spec(grammar: Grammar, spec: Sequence[tuple[str, str]],
                       max_affixes: int = 2, trace=None) -> list[str]:
    """Surface forms of every word matching ``key=value`` assignments.

    Morph sequences from the lexicon are tried when the spec names a
    stem; otherwise only the given features constrain the word, which
    leaves the morphology constraint delayed unless mstring is given.
    """
    h = grammar.hierarchy
    assignments = [resolve_feature(h, k, v) for k, v in spec]
    keys = {p for p, _ in assignments}
    names_stem = any(p[-1] == "stem" for p in keys)
    if not names_stem:
        store = grammar.store(trace)
        word = store.new_node("word")
        for path, t in assignments:
            if not store.path_put(word, path, t):
                return []
        return realize(grammar, store, word)
    out: list[str] = []
    for seq in candidate_words(grammar, max_affixes):
        store = grammar.store(trace)
        word = store.new_node("word")
        if not all(store.path_put(word, path, t) for path, t in assignments):
            continue
        sign = compose_entries(grammar, store, seq)
        if sign is None or not store.path_put(word, "morph", sign):
            continue
        out.extend(realize(grammar, store, word))
    return list(dict.fromkeys(out))


# -- phrases -------------------------------------------------------------------


def apply_principle(store: Store, name: str, node: Node) -> bool:
    """Post the principle ``name`` at ``node`` (licensing does this anyway)."""
    system = store.system
    for c in system.relations.get(name, ()):
        if not store.run(system.post, store, ClauseGoal(system, c, (node,))):
            return False
    return True


def head_feature_principle(store: Store, phrase: Node) -> bool:
    return apply_principle(store, "head_feature_principle", phrase)


def subcat_principle(store: Store, phrase: Node) -> bool:
    return apply_principle(store, "subcat_principle", phrase)


def fs_list(store: Store, items: Sequence[Node | str]) -> Node:
    """First/rest list holding ``items`` (nodes or type names)."""
    def go():
        head = store._new_node("list")
        cur = head
        for it in items:
            store._refine(cur, "nelist")
            first = store._path_get(cur, ("first",))
            if isinstance(it, Node):
                store._unify(first, it)
            else:
                store._refine(first, it)
            cur = store._path_get(cur, ("rest",))
        store._refine(cur, "elist")
        return head
    n = store._attempt(go)
    if n is None:
        raise UnificationFailure("list items are not well-typed")
    return deref(n)


def list_items(store: Store, n: Node) -> list[Node] | None:
    """Elements of a first/rest list, or None if its length is not known."""
    def get(n: Node, f: str) -> Node:
        if n.dag is not None and f in n.dag:
            return deref(n.dag[f])
        return store.path_get(n, f)

    out = []
    n = deref(n)
    while n.type == "nelist":
        out.append(get(n, "first"))
        n = get(n, "rest")
    return out if n.type == "elist" else None


def head_complement(grammar: Grammar, head: Frozen, complements: Sequence[Frozen],
                    trace=None) -> list[Frozen]:
    """Headed phrases over ``head`` and ``complements``, closed under the principles."""
    store = grammar.store(trace)
    phrase = store.new_node("headed_phrase")
    try:
        h = store.build(head)
        comps = [store.build(c) for c in complements]
    except UnificationFailure:
        return []
    comp_list = fs_list(store, comps)
    if not (store.path_put(phrase, "dtrs|head_dtr", h)
            and store.path_put(phrase, "dtrs|comp_dtrs", comp_list)):
        return []
    out = [freeze(grammar.hierarchy, phrase) for _ in store.solutions(label=True)]
    return dedupe(out, grammar.hierarchy)
