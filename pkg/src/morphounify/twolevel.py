"""Extended two-level morphology as a relation over character streams.

A rule file declares the alphabet, the feasible non-identity pairs,
named character sets and the rules themselves::

    alphabet a b d e g r s t ä;
    pair A:a; pair A:ä; pair t:0; pair +:0; pair +:e;
    set dental = {d, t};
    t_elision :: _ <=> t:0 <=> ['+':0, t:t].
    umlaut :: _ <=> A:"a <=> _ :- filter(X, [X::mhead:umlaut===aou_umlaut]).

``<=>`` rules are equivalences, ``=>`` rules only restrict where their
pair may occur and ``<=`` rules only force the surface realization in
their context.  A filter is a list of typing requirements on the word's
morphological sign.  When a filtered rule licenses a pair, its filter is
asserted into that sign; the obligatory half only applies when the sign
already satisfies the filter.

Contexts are sequences of pair patterns.  A bare character or set name
constrains only the lexical side, ``_`` is a wildcard and ``$`` is the
edge of the word.  Left contexts are stored nearest-first.
"""

from __future__ import annotations

import re
from collections.abc import Callable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field, replace

from .constraints import INCOMPATIBLE, SATISFIED, UNDETERMINED, requirement_verdict
from .feature_structures import Node, Store
from .syntax import Requirement
from .type_system import TypeHierarchy

NULL = "0"
BOUNDARY = "+"
EDGE = "$"
END = "<end>"

_DIGRAPHS = {"a": "ä", "o": "ö", "u": "ü", "A": "Ä", "O": "Ö", "U": "Ü"}


class RuleError(ValueError):
    """Malformed or inconsistent rule files."""

    def __init__(self, msg: str, line: int | None = None):
        super().__init__(f"line {line}: {msg}" if line is not None else msg)
        self.line = line


class AlphabetError(ValueError):
    """A string uses characters outside the declared alphabet."""


# -- alphabet ------------------------------------------------------------


class Alphabet:
    """Plain characters, declared pairs and named character sets."""

    def __init__(self, chars: Iterable[str] = (), pairs: Iterable[tuple[str, str]] = (),
                 sets: Mapping[str, Iterable[str]] | None = None):
        self.chars = tuple(dict.fromkeys(chars))
        self.pairs = tuple(dict.fromkeys(pairs))
        self.sets = {k: frozenset(v) for k, v in (sets or {}).items()}
        self.null = NULL
        self.boundary = BOUNDARY
        self.edge = EDGE
        self._pairset = frozenset(self.pairs)
        self._charset = frozenset(self.chars)
        by_lex: dict[str, list[str]] = {}
        for c in self.chars:
            by_lex.setdefault(c, []).append(c)
        for l, s in self.pairs:
            by_lex.setdefault(l, [])
            if s not in by_lex[l]:
                by_lex[l].append(s)
        self._by_lex = {k: tuple(v) for k, v in by_lex.items()}

    def feasible(self, lex: str, surf: str) -> bool:
        if lex == surf:
            return lex in self._charset or (lex, surf) in self._pairset
        return (lex, surf) in self._pairset

    def surfaces(self, lex: str) -> tuple[str, ...]:
        """Feasible surface partners of ``lex`` (identity first)."""
        return self._by_lex.get(lex, ())

    @property
    def lexical(self) -> frozenset[str]:
        return frozenset(self._by_lex) - {NULL}

    @property
    def surface(self) -> frozenset[str]:
        out = set(self.chars)
        out.update(s for _, s in self.pairs)
        out.discard(NULL)
        return frozenset(out)

    def has_lexical_nulls(self) -> bool:
        return NULL in self._by_lex

    def check_lexical(self, s: str) -> None:
        bad = sorted(set(s) - self.lexical)
        if bad:
            raise AlphabetError(f"{s!r}: characters {''.join(bad)!r} are not in the lexical alphabet")

    def check_surface(self, s: str) -> None:
        bad = sorted(set(s) - self.surface)
        if bad:
            raise AlphabetError(f"{s!r}: characters {''.join(bad)!r} are not in the surface alphabet")


# -- rules ---------------------------------------------------------------


@dataclass(frozen=True)
class Elem:
    """One context position.  ``None`` on a side means any character."""

    lex: frozenset[str] | None = None
    surf: frozenset[str] | None = None
    edge: bool = False

    def matches(self, pair: tuple[str, str]) -> bool:
        if self.edge:
            return False
        return ((self.lex is None or pair[0] in self.lex)
                and (self.surf is None or pair[1] in self.surf))

    def __str__(self) -> str:
        if self.edge:
            return EDGE

        def side(s):
            if s is None:
                return "_"
            return next(iter(s)) if len(s) == 1 else "{" + ",".join(sorted(s)) + "}"
        return side(self.lex) if self.surf is None else f"{side(self.lex)}:{side(self.surf)}"


Filter = tuple[tuple[tuple[str, ...], str], ...]


@dataclass(frozen=True)
class TwoLevelRule:
    name: str
    op: str                      # "<=>", "=>" or "<="
    lex: str
    surf: str
    lcon: tuple[Elem, ...] = ()  # nearest position first
    rcon: tuple[Elem, ...] = ()
    filter: Filter = ()
    line: int = 0

    @property
    def pair(self) -> tuple[str, str]:
        return (self.lex, self.surf)

    @property
    def restricts(self) -> bool:
        """The pair occurs only in this context."""
        return self.op in ("<=>", "=>")

    @property
    def obligatory(self) -> bool:
        """Lexical ``lex`` in this context must surface as ``surf``."""
        return self.op in ("<=>", "<=")

    def __str__(self) -> str:
        left = " ".join(str(e) for e in reversed(self.lcon)) or "_"
        right = " ".join(str(e) for e in self.rcon) or "_"
        text = f"{left} {self.op} {self.lex}:{self.surf} {self.op} {right}"
        if self.filter:
            text += " :- filter(" + ", ".join(
                f"{':'.join(p)}={v}" for p, v in self.filter) + ")"
        return text


# -- rule file reader --------------------------------------------------------


_TOKEN = re.compile(r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<op><=>|=>|<=|:-|===|::|[:\[\]{}(),;.=|])
  | (?P<quoted>'(?:\\.|[^'\\])*')
  | (?P<digraph>"[aouAOU])
  | (?P<word>\w+)
  | (?P<sym>[^\s\w])
""", re.VERBOSE)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos, line = 0, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        kind, s = m.lastgroup, m.group()
        if kind != "ws":
            if kind == "quoted":
                s = re.sub(r"\\(.)", r"\1", s[1:-1])
            elif kind == "digraph":
                s, kind = _DIGRAPHS[s[1]], "word"
            out.append((kind, s, line))
        line += m.group().count("\n")
        pos = m.end()
    out.append(("eof", "", line))
    return out


class _RuleParser:
    def __init__(self, text: str, hierarchy: TypeHierarchy | None):
        self.toks = _tokenize(text)
        self.i = 0
        self.hierarchy = hierarchy
        self.chars: list[str] = []
        self.pairs: list[tuple[str, str]] = []
        self.sets: dict[str, frozenset[str]] = {}
        self.rules: list[TwoLevelRule] = []

    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k: int = 1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str):
        raise RuleError(msg, self.tok[2])

    def next(self):
        t = self.tok
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok[0] == "op" and self.tok[1] == text

    def expect(self, text: str):
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.tok[1] or 'end of input'!r}")
        return self.next()

    def char(self) -> str:
        kind, s, _ = self.tok
        if kind in ("word", "quoted", "sym") and len(s) == 1:
            self.next()
            return s
        self.error(f"expected a character, found {s or 'end of input'!r}")

    def parse(self) -> tuple[list[TwoLevelRule], Alphabet]:
        while self.tok[0] != "eof":
            kind, s, _ = self.tok
            if kind == "word" and s == "alphabet" and self.peek()[0] != "op":
                self.next()
                while not self.at(";"):
                    self.chars.append(self.char())
                self.next()
            elif kind == "word" and s == "pair" and self.peek()[0] != "op":
                self.next()
                while True:
                    lex = self.char()
                    self.expect(":")
                    self.pairs.append((lex, self.char()))
                    if not self.at(","):
                        break
                    self.next()
                self.expect(";")
            elif kind == "word" and s == "set" and self.peek()[0] == "word":
                self.next()
                name = self.next()[1]
                self.expect("=")
                self.expect("{")
                members = []
                while not self.at("}"):
                    members.append(self.char())
                    if self.at(","):
                        self.next()
                self.next()
                self.expect(";")
                self.sets[name] = frozenset(members)
            else:
                self.rules.append(self.rule())
        return self.rules, Alphabet(self.chars, self.pairs, self.sets)

    # -- rules -----------------------------------------------------------

    def rule(self) -> TwoLevelRule:
        line = self.tok[2]
        name = f"rule{len(self.rules) + 1}"
        if self.tok[0] == "word" and self.peek()[0] == "op" and self.peek()[1] == "::":
            name = self.next()[1]
            self.next()
        lcon = self.context()
        op = self.arrow()
        lex = self.char()
        self.expect(":")
        surf = self.char()
        if self.arrow() != op:
            raise RuleError(f"{name}: both arrows of a rule must agree", line)
        rcon = self.context()
        flt: Filter = ()
        if self.at(":-"):
            self.next()
            flt = self.filter(name, line)
        self.expect(".")
        alphabet = Alphabet(self.chars, self.pairs, self.sets)
        if not alphabet.feasible(lex, surf):
            raise RuleError(f"{name}: infeasible pair {lex}:{surf}", line)
        for e in lcon + rcon:
            for side in (e.lex, e.surf):
                for c in side or ():
                    if c != NULL and c not in alphabet.lexical and c not in alphabet.surface:
                        raise RuleError(f"{name}: context character {c!r} not in the alphabet", line)
        return TwoLevelRule(name, op, lex, surf, tuple(reversed(lcon)), tuple(rcon), flt, line)

    def arrow(self) -> str:
        for op in ("<=>", "=>", "<="):
            if self.at(op):
                self.next()
                return op
        self.error(f"expected an arrow, found {self.tok[1] or 'end of input'!r}")

    def context(self) -> list[Elem]:
        if self.at("["):
            self.next()
            elems = []
            while not self.at("]"):
                elems.append(self.elem())
                if self.at(","):
                    self.next()
            self.next()
            return elems
        if self.tok[0] == "word" and self.tok[1] == "_" and not (self.peek()[0] == "op" and self.peek()[1] == ":"):
            self.next()
            return []
        return [self.elem()]

    def elem(self) -> Elem:
        if self.tok[0] == "sym" and self.tok[1] == EDGE:
            self.next()
            return Elem(edge=True)
        lex = self.spec()
        if self.at(":"):
            self.next()
            return Elem(lex, self.spec())
        return Elem(lex, None)

    def spec(self) -> frozenset[str] | None:
        kind, s, _ = self.tok
        if kind == "word" and s == "_":
            self.next()
            return None
        if kind == "word" and s in self.sets:
            self.next()
            return self.sets[s]
        if kind == "word" and len(s) > 1:
            self.error(f"unknown set {s}")
        return frozenset([self.char()])

    def filter(self, name: str, line: int) -> Filter:
        if not (self.tok[0] == "word" and self.tok[1] == "filter"):
            self.error("expected filter(...)")
        self.next()
        self.expect("(")
        out = []
        if self.tok[0] == "word" and self.peek()[0] == "op" and self.peek()[1] == ",":
            var = self.next()[1]
            self.next()
            self.expect("[")
            while not self.at("]"):
                if self.next()[1] != var:
                    raise RuleError(f"{name}: filter must constrain {var}", line)
                self.expect("::")
                path = self.path()
                self.expect("===")
                out.append((path, self.value()))
                if self.at(","):
                    self.next()
            self.next()
        else:
            while True:
                path = self.path()
                self.expect("=")
                out.append((path, self.value()))
                if not self.at(","):
                    break
                self.next()
        self.expect(")")
        flt = tuple(out)
        if self.hierarchy is not None:
            check_filter(self.hierarchy, flt, name, line)
        return flt

    def path(self) -> tuple[str, ...]:
        parts = []
        while True:
            if self.tok[0] != "word":
                self.error(f"malformed filter path at {self.tok[1] or 'end of input'!r}")
            parts.append(self.next()[1])
            if not (self.at(":") or self.at("|")):
                return tuple(parts)
            self.next()

    def value(self) -> str:
        kind, s, _ = self.tok
        if kind in ("word", "quoted"):
            self.next()
            return s
        self.error(f"expected a type, found {s or 'end of input'!r}")


def check_filter(h: TypeHierarchy, flt: Filter, name: str = "filter", line: int | None = None,
                 root: str = "msign") -> None:
    """Reject filter paths that no morphological sign can carry."""
    for path, value in flt:
        if not h.is_type(value):
            raise RuleError(f"{name}: unknown type {value} in filter", line)
        t = root
        for f in path:
            r = h.restriction(t, f)
            if r is None:
                carriers = [d for d in sorted(h.descendants(t)) if h.restriction(d, f)]
                if not carriers:
                    raise RuleError(f"{name}: malformed filter path {':'.join(path)}", line)
                r = h.restriction(carriers[0], f)
            t = r
        if h.glb(t, value) is None:
            raise RuleError(f"{name}: {value} is not a possible value of {':'.join(path)}", line)


def parse_rules(text: str, hierarchy: TypeHierarchy | None = None
                ) -> tuple[list[TwoLevelRule], Alphabet]:
    return _RuleParser(text, hierarchy).parse()


# -- compilation ---------------------------------------------------------


def _overlap(a: frozenset[str] | None, b: frozenset[str] | None) -> bool:
    return a is None or b is None or bool(a & b)


def _contexts_overlap(x: Sequence[Elem], y: Sequence[Elem]) -> bool:
    for ex, ey in zip(x, y):
        if ex.edge or ey.edge:
            if ex.edge != ey.edge:
                # the shorter side may still match past the edge only if it has ended
                return False
            continue
        if not (_overlap(ex.lex, ey.lex) and _overlap(ex.surf, ey.surf)):
            return False
    return True


def _filters_compatible(h: TypeHierarchy | None, a: Filter, b: Filter) -> bool:
    if h is None:
        return True
    da = dict(a)
    for path, v in b:
        if path in da and h.glb(da[path], v) is None:
            return False
    return True


@dataclass
class CompiledRuleSet:
    """Rules indexed for the alignment search."""

    alphabet: Alphabet
    rules: tuple[TwoLevelRule, ...]
    restricting: dict[tuple[str, str], tuple[TwoLevelRule, ...]] = field(default_factory=dict)
    obligatory: dict[str, tuple[TwoLevelRule, ...]] = field(default_factory=dict)
    right_window: int = 0
    conflicts: tuple[str, ...] = ()


def _order_key(rule: TwoLevelRule, index: int):
    # specific (longer trigger) before general, then file order
    return (-(len(rule.lcon) + len(rule.rcon) + len(rule.filter)), index)


def find_conflicts(rules: Sequence[TwoLevelRule], hierarchy: TypeHierarchy | None = None) -> list[str]:
    """Pairs of obligatory rules forcing different surfaces in overlapping contexts."""
    out = []
    must = [r for r in rules if r.obligatory]
    for i, a in enumerate(must):
        for b in must[i + 1:]:
            if a.lex != b.lex or a.surf == b.surf:
                continue
            if (_contexts_overlap(a.lcon, b.lcon) and _contexts_overlap(a.rcon, b.rcon)
                    and _filters_compatible(hierarchy, a.filter, b.filter)):
                out.append(f"{a.name} and {b.name} force {a.lex} to surface as both "
                           f"{a.surf} and {b.surf} in overlapping contexts")
    return out


def compile_rules(rules: Sequence[TwoLevelRule], alphabet: Alphabet,
                  hierarchy: TypeHierarchy | None = None, strict: bool = True) -> CompiledRuleSet:
    """Index rules by pair and lexical trigger; raise on conflicting equivalences."""
    for r in rules:
        if not alphabet.feasible(r.lex, r.surf):
            raise RuleError(f"{r.name}: infeasible pair {r.lex}:{r.surf}", r.line)
    conflicts = find_conflicts(rules, hierarchy)
    if conflicts and strict:
        raise RuleError("; ".join(conflicts))
    order = sorted(range(len(rules)), key=lambda i: _order_key(rules[i], i))
    restricting: dict[tuple[str, str], list[TwoLevelRule]] = {}
    obligatory: dict[str, list[TwoLevelRule]] = {}
    for i in order:
        r = rules[i]
        if r.restricts:
            restricting.setdefault(r.pair, []).append(r)
        if r.obligatory:
            obligatory.setdefault(r.lex, []).append(r)
    window = max((len(r.rcon) for r in rules), default=0)
    return CompiledRuleSet(alphabet, tuple(rules),
                           {k: tuple(v) for k, v in restricting.items()},
                           {k: tuple(v) for k, v in obligatory.items()},
                           window, tuple(conflicts))


# -- matching ------------------------------------------------------------


def match_left(lcon: Sequence[Elem], pairs: Sequence[tuple[str, str]], i: int) -> bool:
    for k, e in enumerate(lcon):
        j = i - 1 - k
        if j < 0:
            return e.edge and k == len(lcon) - 1
        if not e.matches(pairs[j]):
            return False
    return True


def match_right(rcon: Sequence[Elem], pairs: Sequence[tuple[str, str]], i: int,
                complete: bool = True) -> bool | None:
    """True/False, or None while the pairs after ``i`` are still unknown."""
    for k, e in enumerate(rcon):
        j = i + 1 + k
        if j >= len(pairs):
            if not complete:
                return None
            return e.edge and k == len(rcon) - 1
        if not e.matches(pairs[j]):
            return False
    return True


def filter_verdict(h: TypeHierarchy | None, flt: Filter, f: Node | None) -> str:
    if not flt:
        return SATISFIED
    if f is None or h is None:
        return UNDETERMINED
    result = SATISFIED
    for path, value in flt:
        v, _ = requirement_verdict(h, f, Requirement("X", path, value))
        if v == INCOMPATIBLE:
            return INCOMPATIBLE
        if v == UNDETERMINED:
            result = UNDETERMINED
    return result


@dataclass(frozen=True)
class Violation:
    position: int
    rule: str | None
    reason: str


def validate_alignment(ruleset: CompiledRuleSet, pairs: Sequence[tuple[str, str]],
                       verdict: Callable[[Filter], str]) -> list[Violation]:
    """Declarative check of a complete alignment.

    ``verdict`` decides filters against the word's final sign.  Filters
    that are still undetermined do not trigger obligatory rules.
    """
    out = []
    alphabet = ruleset.alphabet
    for i, pair in enumerate(pairs):
        if not alphabet.feasible(*pair):
            out.append(Violation(i, None, f"infeasible pair {pair[0]}:{pair[1]}"))
            continue
        rules = ruleset.restricting.get(pair)
        if rules and not any(match_left(r.lcon, pairs, i) and match_right(r.rcon, pairs, i)
                             and verdict(r.filter) == SATISFIED for r in rules):
            out.append(Violation(i, rules[0].name, f"{pair[0]}:{pair[1]} outside its contexts"))
        for r in ruleset.obligatory.get(pair[0], ()):
            if (r.surf != pair[1] and match_left(r.lcon, pairs, i)
                    and match_right(r.rcon, pairs, i) and verdict(r.filter) == SATISFIED):
                out.append(Violation(i, r.name, f"{pair[0]} must surface as {r.surf}"))
    return out


# -- lookahead -----------------------------------------------------------


def lookahead(alphabet: Alphabet, continuations: Iterable[str], surface_rest: str,
              nulls_left: int) -> set:
    """Admissible next pairs given the lexical continuations and the
    remaining plain surface string.  ``END`` stands for ending the word.
    """
    out: set = set()
    for c in continuations:
        if c == END:
            if not surface_rest:
                out.add(END)
            continue
        for s in alphabet.surfaces(c):
            if s == NULL:
                if nulls_left > 0:
                    out.add((c, s))
            elif surface_rest and surface_rest[0] == s:
                out.add((c, s))
    return out


# -- the relation ----------------------------------------------------------


@dataclass(frozen=True)
class _State:
    lex_i: int = 0
    surf_i: int = 0
    prefix: str = ""
    comp: object = None
    morphs: int = 0
    checked: int = 0
    lex_run: int = 0
    surf_run: int = 0


class _Context:
    def __init__(self, store: Store, lexical: str | None, surface: str | None, f: Node | None):
        self.store = store
        self.lexical = lexical
        self.surface = surface
        self.f = f
        self.pairs: list[tuple[str, str]] = []
        self.trace = store.trace


class Morphology:
    """The two-level relation between lexical string, surface string and sign.

    Given a lexicon (``trie``) and a ``composer``, lexical strings are read
    along the trie and morph entries are combined into the sign at each
    morph boundary, so filters see the word's features in analysis and in
    generation alike.  A ground lexical string restricts that walk (or is
    taken as is without a lexicon); a ground surface string restricts the
    surface side, which is enumerated otherwise.
    """

    def __init__(self, rules: CompiledRuleSet, trie=None, composer=None,
                 max_nulls: int = 2, use_lookahead: bool = True,
                 trace: Callable[[str], None] | None = None):
        self.rules = rules
        self.alphabet = rules.alphabet
        self.trie = trie
        self.composer = composer
        self.max_nulls = max_nulls
        self.use_lookahead = use_lookahead
        self.trace = trace

    # -- entry point -------------------------------------------------------

    def solve(self, store: Store, lexical: str | None, surface: str | None,
              f: Node | None) -> Iterator[tuple[str, str]]:
        """Yield ``(lexical, surface)`` for each licensed alignment.

        While a result is being consumed the store holds the bindings made
        for it (filters, composed morphs); they are undone on resumption.
        """
        if lexical is None and surface is None:
            raise ValueError("morphology needs a ground lexical or surface string")
        if lexical is None and (self.trie is None or self.composer is None):
            raise ValueError("analysis needs a morph lexicon and a word grammar")
        if surface is not None:
            self.alphabet.check_surface(surface)
        if lexical is not None:
            try:
                self.alphabet.check_lexical(lexical)
            except ValueError:
                return
        ctx = _Context(store, lexical, surface, f)
        ctx.trace = self.trace or ctx.trace
        comp = self.composer.start(store) if self._segmenting(ctx) else None
        yield from self._step(ctx, _State(comp=comp))

    # -- search ------------------------------------------------------------

    def _segmenting(self, ctx: _Context) -> bool:
        """Lexical strings are read as morph sequences from the lexicon."""
        return self.trie is not None and self.composer is not None

    def _lex_continuations(self, ctx: _Context, st: _State) -> set[str]:
        """Next lexical characters (END when the word may stop here)."""
        given = None
        if ctx.lexical is not None:
            given = {ctx.lexical[st.lex_i]} if st.lex_i < len(ctx.lexical) else {END}
        if not self._segmenting(ctx):
            return given
        out = set()
        conts = self.trie.continuations(st.prefix)
        out.update(c for c in conts if c != self.trie.ACCEPT)
        if not st.prefix or self.trie.ACCEPT in conts:
            out.update(c for c in self.trie.continuations("") if c != self.trie.ACCEPT)
        if st.prefix and self.trie.ACCEPT in conts or not st.prefix and st.morphs:
            out.add(END)
        return out if given is None else out & given

    def _can_end(self, ctx: _Context, st: _State) -> bool:
        if ctx.surface is not None and st.surf_i != len(ctx.surface):
            return False
        if ctx.lexical is not None and st.lex_i != len(ctx.lexical):
            return False
        if self._segmenting(ctx):
            return not st.prefix and st.morphs > 0
        return True

    def _candidates(self, ctx: _Context, st: _State) -> Iterator[tuple[str, str]]:
        if self._segmenting(ctx):
            # within the current morph; boundaries are crossed in _step
            lex_chars = {c for c in self.trie.continuations(st.prefix) if c != self.trie.ACCEPT}
            if ctx.lexical is not None:
                lex_chars &= {ctx.lexical[st.lex_i]} if st.lex_i < len(ctx.lexical) else set()
            lex_chars = sorted(lex_chars)
        else:
            lex_chars = sorted(self._lex_continuations(ctx, st) - {END})
        if self.alphabet.has_lexical_nulls() and st.lex_run < self.max_nulls:
            lex_chars.append(NULL)
        pairs = ctx.pairs
        i = len(pairs)
        for c in lex_chars:
            for s in self.alphabet.surfaces(c):
                if s == NULL:
                    if st.surf_run >= self.max_nulls:
                        continue
                elif ctx.surface is not None and (
                        st.surf_i >= len(ctx.surface) or ctx.surface[st.surf_i] != s):
                    continue
                rules = self.rules.restricting.get((c, s))
                if rules:
                    pairs.append((c, s))
                    ok = any(match_left(r.lcon, pairs, i) for r in rules)
                    pairs.pop()
                    if not ok:
                        continue
                yield (c, s)

    def _advance(self, ctx: _Context, st: _State, pair: tuple[str, str]) -> _State:
        c, s = pair
        return replace(
            st,
            lex_i=st.lex_i + (c != NULL),
            surf_i=st.surf_i + (s != NULL),
            prefix=st.prefix + c if c != NULL and self._segmenting(ctx) else st.prefix,
            lex_run=st.lex_run + 1 if c == NULL else 0,
            surf_run=st.surf_run + 1 if s == NULL else 0,
        )

    def _promising(self, ctx: _Context, st: _State) -> bool:
        conts = self._lex_continuations(ctx, st)
        if self.alphabet.has_lexical_nulls() and st.lex_run < self.max_nulls:
            conts = conts | {NULL}
        rest = ctx.surface[st.surf_i:] if ctx.surface is not None else None
        if rest is None:
            return bool(conts)
        return bool(lookahead(self.alphabet, conts, rest, self.max_nulls - st.surf_run))

    def _step(self, ctx: _Context, st: _State) -> Iterator[tuple[str, str]]:
        if self._can_end(ctx, st):
            yield from self._finish(ctx, st)
        if self._segmenting(ctx) and st.prefix:
            for entry in self.trie.lookup(st.prefix):
                store = ctx.store
                cp = store.checkpoint()
                try:
                    comp = self.composer.add(store, st.comp, entry)
                    if comp is not None:
                        if ctx.trace:
                            ctx.trace(f"morph {st.prefix!r} ({entry.kind})")
                        yield from self._step(ctx, replace(st, prefix="", comp=comp,
                                                           morphs=st.morphs + 1))
                finally:
                    store.undo_to(cp)
                    store.release(cp)
        for pair in list(self._candidates(ctx, st)):
            nxt = self._advance(ctx, st, pair)
            ctx.pairs.append(pair)
            try:
                if self.use_lookahead and not self._promising(ctx, nxt):
                    continue
                upto = len(ctx.pairs) - self.rules.right_window
                yield from self._finalize(ctx, nxt, upto, False,
                                          lambda s2: self._step(ctx, s2))
            finally:
                ctx.pairs.pop()

    def _finish(self, ctx: _Context, st: _State) -> Iterator[tuple[str, str]]:
        store = ctx.store
        cp = store.checkpoint()
        try:
            if self._segmenting(ctx) and not self.composer.finish(store, st.comp, ctx.f):
                return
            yield from self._finalize(ctx, st, len(ctx.pairs), True,
                                      lambda s2: self._accept(ctx))
        finally:
            store.undo_to(cp)
            store.release(cp)

    def _accept(self, ctx: _Context) -> Iterator[tuple[str, str]]:
        h = ctx.store.hierarchy
        problems = validate_alignment(self.rules, ctx.pairs,
                                      lambda flt: filter_verdict(h, flt, ctx.f))
        if problems:
            if ctx.trace:
                ctx.trace(f"reject {self.show(ctx.pairs)}: {problems[0].reason}")
            return
        lex = "".join(l for l, _ in ctx.pairs if l != NULL)
        surf = "".join(s for _, s in ctx.pairs if s != NULL)
        if ctx.trace:
            ctx.trace(f"accept {self.show(ctx.pairs)}")
        yield lex, surf

    @staticmethod
    def show(pairs: Sequence[tuple[str, str]]) -> str:
        return " ".join(f"{l}:{s}" for l, s in pairs)

    # -- position checks -----------------------------------------------------

    def _finalize(self, ctx: _Context, st: _State, upto: int, complete: bool, cont):
        if st.checked >= upto:
            yield from cont(st)
            return
        for _ in self._check_position(ctx, st.checked, complete):
            yield from self._finalize(ctx, replace(st, checked=st.checked + 1), upto, complete, cont)

    def _check_position(self, ctx: _Context, i: int, complete: bool) -> Iterator[None]:
        """Apply both rule halves at position ``i`` once its contexts are known."""
        pairs = ctx.pairs
        lex, surf = pairs[i]
        h = ctx.store.hierarchy
        for r in self.rules.obligatory.get(lex, ()):
            if r.surf == surf or not match_left(r.lcon, pairs, i):
                continue
            if match_right(r.rcon, pairs, i, complete) and \
                    filter_verdict(h, r.filter, ctx.f) == SATISFIED:
                if ctx.trace:
                    ctx.trace(f"block {lex}:{surf} at {i} by {r.name}")
                return
        rules = self.rules.restricting.get((lex, surf))
        if not rules:
            yield
            return
        matching = [r for r in rules
                    if match_left(r.lcon, pairs, i) and match_right(r.rcon, pairs, i, complete)]
        verdicts = [filter_verdict(h, r.filter, ctx.f) for r in matching]
        if SATISFIED in verdicts:
            yield
            return
        store = ctx.store
        for r, v in zip(matching, verdicts):
            if v == INCOMPATIBLE or ctx.f is None:
                continue
            cp = store.checkpoint()
            try:
                if store.run(_assert_filter, store, ctx.f, r.filter):
                    if ctx.trace:
                        ctx.trace(f"commit {r.name} for {lex}:{surf} at {i}")
                    yield
            finally:
                store.undo_to(cp)
                store.release(cp)


def _assert_filter(store: Store, f: Node, flt: Filter) -> None:
    for path, value in flt:
        store._path_put(f, path, value)
