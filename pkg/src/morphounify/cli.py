"""Command-line front end.

    morphounify [--grammar G --rules R --morphs M --lexemes L]
                (analyze WORD | generate K=V... | check) [--format avm|json] [--trace]

Files default to the bundled demo grammar.  Exit status is 0 on success,
1 when there is no result (or check finds problems) and 2 for load and
usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import unicodedata
import warnings
from dataclasses import dataclass
from pathlib import Path

from .feature_structures import format_avm, to_json
from .grammar import (
    Grammar,
    GrammarError,
    InsufficientInstantiation,
    UnknownStemWarning,
    analyze_word,
    demo_file,
    generate_from_spec,
    load_type_grammar,
)
from .lexicon import load_lexemes, load_morph_lexicon
from .feature_structures import Store
from .twolevel import AlphabetError, compile_rules, parse_rules

FILES = ("grammar", "rules", "morphs", "lexemes")


@dataclass
class SessionConfig:
    grammar: str | None = None
    rules: str | None = None
    morphs: str | None = None
    lexemes: str | None = None
    format: str = "avm"
    max_nulls: int = 2
    trace: bool = False

    def texts(self) -> tuple[list[str], list[str]]:
        texts, names = [], []
        for kind in FILES:
            path = getattr(self, kind)
            if path is None:
                texts.append(demo_file(f"demo.{kind}"))
                names.append(f"demo.{kind}")
            else:
                try:
                    texts.append(Path(path).read_text(encoding="utf-8"))
                except OSError as exc:
                    raise GrammarError(f"cannot read {kind} file {path}: {exc.strerror}") from None
                names.append(path)
        return texts, names

    def load(self) -> Grammar:
        texts, names = self.texts()
        return Grammar.from_texts(*texts, max_nulls=self.max_nulls, names=names)


def _common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    for kind in FILES:
        parser.add_argument(f"--{kind}", metavar="FILE", default=d,
                            help=None if suppress else f"{kind} file (default: bundled demo)")
    parser.add_argument("--format", choices=("avm", "json"),
                        default=d if suppress else "avm", help=None if suppress else "output format")
    parser.add_argument("--max-nulls", type=int, default=d if suppress else 2,
                        help=None if suppress else "maximum consecutive null characters")
    parser.add_argument("--trace", action="store_true", default=d if suppress else False,
                        help=None if suppress else "print rule commitments and goal wakes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morphounify",
        description="Morphological analysis and generation with typed feature structures.")
    _common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("analyze", help="analyze a surface word")
    p.add_argument("word")
    _common(p, suppress=True)
    p = sub.add_parser("generate", help="generate surface words from KEY=VALUE features")
    p.add_argument("spec", nargs="+", metavar="KEY=VALUE")
    _common(p, suppress=True)
    p = sub.add_parser("check", help="validate grammar, rules and lexicons")
    _common(p, suppress=True)
    return parser


def _config(args: argparse.Namespace) -> SessionConfig:
    return SessionConfig(args.grammar, args.rules, args.morphs, args.lexemes,
                         args.format, args.max_nulls, args.trace)


def _tracer(enabled: bool):
    if not enabled:
        return None
    return lambda msg: print(f"trace: {msg}", file=sys.stderr)


def cmd_analyze(word: str, cfg: SessionConfig, out=None) -> int:
    out = out or sys.stdout
    g = cfg.load()
    trace = _tracer(cfg.trace)
    word = unicodedata.normalize("NFC", word)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", UnknownStemWarning)
        results = analyze_word(g, word, trace=trace)
    for w in dict.fromkeys(str(c.message) for c in caught):
        print(f"warning: {w}", file=sys.stderr)
    if not results:
        print("no analysis", file=out)
        return 1
    if cfg.format == "json":
        print(json.dumps([to_json(r) for r in results], ensure_ascii=False, indent=2), file=out)
    else:
        print("\n\n".join(format_avm(r) for r in results), file=out)
    return 0


def parse_spec(items: list[str]) -> list[tuple[str, str]]:
    spec = []
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key or not value:
            raise ValueError(f"expected KEY=VALUE, got {item!r}")
        spec.append((key, unicodedata.normalize("NFC", value)))
    return spec


def cmd_generate(items: list[str], cfg: SessionConfig, out=None) -> int:
    out = out or sys.stdout
    spec = parse_spec(items)
    g = cfg.load()
    trace = _tracer(cfg.trace)
    try:
        forms = generate_from_spec(g, spec, trace=trace)
    except InsufficientInstantiation as exc:
        print(str(exc), file=out)
        return 1
    if not forms:
        print("no realization", file=out)
        return 1
    if cfg.format == "json":
        print(json.dumps(forms, ensure_ascii=False), file=out)
    else:
        for f in forms:
            print(f, file=out)
    return 0


def check_report(cfg: SessionConfig) -> list[str]:
    """Everything wrong with the configured files, loading as far as possible."""
    texts, names = cfg.texts()
    try:
        h, system = load_type_grammar(texts[0], names[0])
    except GrammarError as exc:
        return [f"grammar: {exc}"]
    problems = [f"grammar: {e}" for e in h.ambiguous_meets()]
    alphabet = None
    try:
        rules, alphabet = parse_rules(texts[1], h)
        compiled = compile_rules(rules, alphabet, h, strict=False)
        problems.extend(f"rules: conflict: {c}" for c in compiled.conflicts)
    except ValueError as exc:
        problems.append(f"rules: {names[1]}: {exc}")
    store = Store(h, system)
    trie = lexemes = None
    try:
        trie = load_morph_lexicon(texts[2], store, alphabet, names[2])
    except ValueError as exc:
        problems.append(f"morphs: {exc}")
    try:
        lexemes = load_lexemes(texts[3], store, names[3])
    except ValueError as exc:
        problems.append(f"lexemes: {exc}")
    if trie is not None and lexemes is not None:
        for e in trie:
            if h.subtype(e.kind, "marg") and e.stem is not None and not lexemes.lookup(e.stem):
                problems.append(f"lexicon: stem {e.stem!r} of morph {e.key!r} has no lexeme entry")
    return problems


def cmd_check(cfg: SessionConfig, out=None) -> int:
    out = out or sys.stdout
    problems = check_report(cfg)
    for p in problems:
        print(p, file=out)
    if problems:
        print(f"{len(problems)} problem(s)", file=out)
        return 1
    print("ok", file=out)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _config(args)
    try:
        if args.command == "analyze":
            return cmd_analyze(args.word, cfg)
        if args.command == "generate":
            return cmd_generate(args.spec, cfg)
        return cmd_check(cfg)
    except (GrammarError, AlphabetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
