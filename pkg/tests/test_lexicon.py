import pytest

from morphounify.feature_structures import Store, UnificationFailure
from morphounify.lexicon import (
    ACCEPT,
    LexiconError,
    MorphTrie,
    dump_lexemes,
    dump_morph_lexicon,
    is_acyclic,
    load_lexemes,
    load_morph_lexicon,
    lookup_lexeme,
    term_to_frozen,
)
from morphounify.syntax import parse_term


def test_demo_morphs(demo):
    keys = demo.morphs.strings()
    assert keys == ["rAt", "sag", "bad", "+t", "+st", "+e"]
    [rat] = demo.morphs.lookup("rAt")
    assert rat.kind == "marg" and rat.stem == "rat"
    assert rat.fs.type_at("mstring") == '"rAt"'
    [t] = demo.morphs.lookup("+t")
    assert t.kind == "rightfunctor" and t.fs.type_at("affix") == '"+t"'
    assert t.fs.follow("stem") == t.fs.follow("arg|stem")


def test_trie_continuations(demo):
    trie = demo.morphs
    assert trie.continuations("") == frozenset("rsb+")
    assert trie.continuations("+") == frozenset("tse")
    assert trie.continuations("+s") == frozenset("t")
    assert ACCEPT in trie.continuations("+t")
    assert trie.continuations("x") == frozenset()
    assert trie.accepts("bad") and not trie.accepts("ba")
    assert len(trie) == 6


def test_homographs_share_a_trie_node(demo):
    store = demo.store()
    text = ('morph "sag" : marg [stem: "sag", mhead: verb_stem].\n'
            'morph "sag" : marg [stem: "sag", mhead: noun_stem].\n')
    trie = load_morph_lexicon(text, store, demo.alphabet)
    assert [e.fs.type_at("mhead") for e in trie.lookup("sag")] == ["verb_stem", "noun_stem"]


def test_lexemes(demo):
    [rat] = lookup_lexeme(demo.lexemes, "rat")
    assert rat.fs.type_at("content") == "guess_rel"
    assert rat.fs.type_at("subcat|rest|first") == "np"
    assert lookup_lexeme(demo.lexemes, "xyz") == []
    assert sorted(demo.lexemes.stems()) == ["bad", "rat", "sag"]


@pytest.mark.parametrize("text", [
    'morph "x%" : marg [stem: "x"].',                          # outside the lexical alphabet
    'morph "rAt" : marg [stem: "rat", mhead: cat].',           # ill-typed value
    'morph "rAt" : marg [nope: "rat"].',                       # unknown feature
    'morph "rAt" : cat [head: verb].',                         # not a morphological sign
    'morph "rAt" : marg [stem: #1 "a", mstring: #1 "b"].',     # inconsistent tag
    'lexeme "rAt" : lexeme [].',                               # wrong entry kind
    'morph "" : marg [].',
])
def test_bad_morph_entries(demo, text):
    with pytest.raises((LexiconError, ValueError)):
        load_morph_lexicon(text, demo.store(), demo.alphabet)


def test_bad_lexeme_entries(demo):
    with pytest.raises(LexiconError):
        load_lexemes('lexeme "a" : lexeme [subcat: np].', demo.store())
    with pytest.raises(LexiconError):
        load_lexemes('lexeme "a" : lexeme [content: say_rel].\n'
                     'lexeme "a" : lexeme [content: say_rel].', demo.store())


def test_cycles_are_rejected(demo):
    h = demo.hierarchy
    fs = term_to_frozen(parse_term("#1 nelist [rest: #1]"), h)
    assert not is_acyclic(fs)
    with pytest.raises(LexiconError):
        load_lexemes('lexeme "a" : lexeme [subcat: #1 nelist [rest: #1]].', demo.store())


def test_dump_and_reload_round_trip(demo):
    store = demo.store()
    trie = load_morph_lexicon(dump_morph_lexicon(demo.morphs), store, demo.alphabet)
    assert [(e.key, e.fs) for e in trie] == [(e.key, e.fs) for e in demo.morphs]
    lex = load_lexemes(dump_lexemes(demo.lexemes), store)
    assert [(e.stem, e.fs) for e in lex.entries] == [(e.stem, e.fs) for e in demo.lexemes.entries]


def test_entries_are_licensed(demo):
    # a word entry must satisfy the word principle: its head is a verb
    h = demo.hierarchy
    store = Store(h, demo.system)
    with pytest.raises(UnificationFailure):
        store.build(term_to_frozen(parse_term("word [synsem: [loc: [cat: [head: noun]]]]"), h))


def test_empty_trie():
    trie = MorphTrie()
    assert trie.continuations("") == frozenset() and list(trie) == []
