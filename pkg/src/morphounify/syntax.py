"""Reader for the grammar and lexicon file formats.

Grammar files contain type declarations and constraint definitions::

    type nelist < list [first: top, rest: list].
    head_feature_principle(X) :=
        X::=headed_phrase
      ==>
        X::synsem:loc:cat:head===H,
        X::dtrs:head_dtr:synsem:loc:cat:head===H.

Lexicon files contain entries written as attribute-value terms::

    morph "rAt" : marg [stem: "rat", mhead: verb_stem [epenthese: '-']].
    lexeme "rat" : [subcat: <np>, content: guess_rel].

``#1`` marks coreference, ``<a, b>`` is a list, ``"..."`` a string value
and ``'...'`` a quoted type name.  ``%`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .type_system import literal


class ParseError(ValueError):
    def __init__(self, msg: str, line: int | None = None, source: str | None = None):
        where = ""
        if source:
            where += source
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {msg}" if where else msg)
        self.line = line


_TOKEN = re.compile(r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<string>"(?:\\.|[^"\\])*")
  | (?P<quoted>'(?:\\.|[^'\\])*')
  | (?P<tag>\#\d+)
  | (?P<op>===>|===|==>|::=|:=|::|:-|[:|,.()\[\]<>=])
  | (?P<word>\w+)
""", re.VERBOSE)


@dataclass
class Token:
    kind: str
    text: str
    line: int


def tokenize(text: str, source: str | None = None) -> list[Token]:
    out = []
    pos = 0
    line = 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, source)
        kind = m.lastgroup
        s = m.group()
        if kind != "ws":
            if kind == "string":
                s = re.sub(r"\\(.)", r"\1", s[1:-1])
            elif kind == "quoted":
                s = s[1:-1].replace("\\'", "'")
            out.append(Token(kind, s, line))
        line += m.group().count("\n")
        pos = m.end()
    out.append(Token("eof", "", line))
    return out


# -- ASTs ----------------------------------------------------------------


@dataclass
class Term:
    """Attribute-value description.  ``type`` None means "use the default"."""

    type: str | None = None
    feats: list[tuple[tuple[str, ...], Term]] = field(default_factory=list)
    tag: int | None = None
    items: list[Term] | None = None  # list syntax <a, b>


@dataclass
class TypeDecl:
    name: str
    parents: list[str]
    features: dict[str, str]
    line: int


@dataclass(frozen=True)
class Requirement:
    """Typing requirement ``Var::path===Type`` (strict for subtype_of)."""

    var: str
    path: tuple[str, ...]
    type: str
    strict: bool = False


@dataclass(frozen=True)
class PathEq:
    var: str
    path: tuple[str, ...]
    value: str          # variable name or type name
    is_var: bool


@dataclass(frozen=True)
class VarEq:
    left: str
    right: str


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[str, ...]


@dataclass
class Clause:
    name: str
    params: tuple[str, ...]
    antecedent: tuple[Requirement, ...] | None
    body: tuple
    line: int = 0

    @property
    def conditional(self) -> bool:
        return self.antecedent is not None


@dataclass
class Entry:
    kind: str     # "morph" or "lexeme"
    key: str
    term: Term
    line: int


class _Parser:
    def __init__(self, text: str, source: str | None = None):
        self.toks = tokenize(text, source)
        self.i = 0
        self.source = source

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str):
        raise ParseError(msg, self.tok.line, self.source)

    def next(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.next()

    def word(self) -> str:
        if self.tok.kind != "word":
            self.error(f"expected a name, found {self.tok.text or 'end of input'!r}")
        return self.next().text

    def type_name(self) -> str:
        t = self.tok
        if t.kind in ("word", "quoted"):
            self.next()
            return t.text
        if t.kind == "string":
            self.next()
            return literal(t.text)
        self.error(f"expected a type, found {t.text or 'end of input'!r}")

    def path(self, seps: tuple[str, ...] = (":", "|")) -> tuple[str, ...]:
        parts = [self.word()]
        while any(self.at(s) for s in seps):
            self.next()
            parts.append(self.word())
        return tuple(parts)

    # -- terms -----------------------------------------------------------

    def term(self) -> Term:
        tag = None
        if self.tok.kind == "tag":
            tag = int(self.next().text[1:])
        if self.at("<"):
            return self.list_term(tag)
        t = Term(tag=tag)
        if self.tok.kind in ("word", "quoted", "string"):
            t.type = self.type_name()
        elif tag is None and not self.at("["):
            self.error(f"expected a value, found {self.tok.text or 'end of input'!r}")
        if self.at("["):
            self.next()
            if not self.at("]"):
                while True:
                    p = self.path(("|",))  # ':' separates feature and value
                    self.expect(":")
                    t.feats.append((p, self.term()))
                    if not self.at(","):
                        break
                    self.next()
            self.expect("]")
        return t

    def list_term(self, tag: int | None) -> Term:
        self.expect("<")
        items = []
        if not self.at(">"):
            while True:
                items.append(self.term())
                if not self.at(","):
                    break
                self.next()
        self.expect(">")
        return Term(tag=tag, items=items)

    # -- grammar statements ---------------------------------------------

    def type_decl(self) -> TypeDecl:
        line = self.next().line  # 'type'
        name = self.type_name()
        parents: list[str] = []
        feats: dict[str, str] = {}
        if self.at("<"):
            self.next()
            parents.append(self.type_name())
            while self.at(","):
                self.next()
                parents.append(self.type_name())
        if self.at("["):
            self.next()
            while not self.at("]"):
                f = self.word()
                self.expect(":")
                if f in feats:
                    self.error(f"feature {f} declared twice on {name}")
                feats[f] = self.type_name()
                if self.at(","):
                    self.next()
            self.expect("]")
        self.expect(".")
        return TypeDecl(name, parents, feats, line)

    def clause(self) -> Clause:
        line = self.tok.line
        name = self.word()
        self.expect("(")
        params = [self.variable()]
        while self.at(","):
            self.next()
            params.append(self.variable())
        self.expect(")")
        self.expect(":=")
        items = self.items()
        antecedent = None
        if self.at("==>") or self.at("===>"):
            self.next()
            antecedent = []
            for it in items:
                if isinstance(it, Requirement):
                    antecedent.append(it)
                elif isinstance(it, PathEq) and not it.is_var:
                    antecedent.append(Requirement(it.var, it.path, it.value))
                else:
                    raise ParseError("antecedents may only contain typing requirements",
                                       line, self.source)
            items = self.items()
        self.expect(".")
        body = []
        for it in items:
            if isinstance(it, Requirement):
                if it.strict:
                    raise ParseError("subtype_of is only allowed in antecedents", line, self.source)
                body.append(PathEq(it.var, it.path, it.type, False))
            else:
                body.append(it)
        return Clause(name, tuple(params), None if antecedent is None else tuple(antecedent),
                      tuple(body), line)

    def variable(self) -> str:
        t = self.tok
        if t.kind != "word" or not (t.text[0].isupper() or t.text[0] == "_"):
            self.error(f"expected a variable, found {t.text or 'end of input'!r}")
        return self.next().text

    def items(self) -> list:
        out = [self.item()]
        while self.at(","):
            self.next()
            out.append(self.item())
        return out

    def item(self):
        t = self.tok
        if t.kind != "word":
            self.error(f"unexpected {t.text or 'end of input'!r}")
        if self.peek().kind == "op" and self.peek().text == "(":
            name = self.next().text
            self.expect("(")
            args = []
            if not self.at(")"):
                args.append(self.variable())
                while self.at(","):
                    self.next()
                    args.append(self.variable())
            self.expect(")")
            return Call(name, tuple(args))
        var = self.variable()
        if self.at("::="):
            self.next()
            return Requirement(var, (), self.type_name())
        if self.at("="):
            self.next()
            return VarEq(var, self.variable())
        self.expect("::")
        path = self.path()
        self.expect("===")
        if self.tok.kind == "word" and self.tok.text == "subtype_of" and self.peek().text == "(":
            self.next()
            self.expect("(")
            ty = self.type_name()
            self.expect(")")
            return Requirement(var, path, ty, strict=True)
        nt = self.tok
        if nt.kind == "word" and (nt.text[0].isupper() or nt.text[0] == "_"):
            return PathEq(var, path, self.next().text, True)
        return PathEq(var, path, self.type_name(), False)

    # -- top level -------------------------------------------------------

    def grammar(self) -> tuple[list[TypeDecl], list[Clause]]:
        decls, clauses = [], []
        while self.tok.kind != "eof":
            if self.tok.kind == "word" and self.tok.text == "type" and self.peek().kind != "op":
                decls.append(self.type_decl())
            else:
                clauses.append(self.clause())
        return decls, clauses

    def entries(self) -> list[Entry]:
        out = []
        while self.tok.kind != "eof":
            t = self.tok
            if t.kind != "word" or t.text not in ("morph", "lexeme"):
                self.error(f"expected 'morph' or 'lexeme', found {t.text!r}")
            self.next()
            if self.tok.kind != "string":
                self.error("expected a quoted string key")
            key = self.next().text
            self.expect(":")
            term = self.term()
            self.expect(".")
            out.append(Entry(t.text, key, term, t.line))
        return out


def parse_grammar(text: str, source: str | None = None) -> tuple[list[TypeDecl], list[Clause]]:
    return _Parser(text, source).grammar()


def parse_entries(text: str, source: str | None = None) -> list[Entry]:
    return _Parser(text, source).entries()


def parse_term(text: str) -> Term:
    p = _Parser(text)
    t = p.term()
    if p.tok.kind != "eof":
        p.error(f"trailing input {p.tok.text!r}")
    return t
