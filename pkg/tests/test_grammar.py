import unicodedata
import warnings

import pytest

import oracles
from morphounify.feature_structures import Store, freeze
from morphounify.grammar import (
    Grammar,
    GrammarError,
    InsufficientInstantiation,
    UnknownStemWarning,
    analyze_word,
    candidate_words,
    demo_file,
    generate_from_spec,
    generate_word,
    head_complement,
    resolve_feature,
)
from morphounify.lexicon import build_entry, term_to_frozen
from morphounify.syntax import parse_term

DEMO = {k: demo_file(f"demo.{k}") for k in ("grammar", "rules", "morphs", "lexemes")}


def variant(**changes):
    texts = dict(DEMO)
    for k, extra in changes.items():
        texts[k] = texts[k] + "\n" + extra
    return Grammar.from_texts(texts["grammar"], texts["rules"], texts["morphs"], texts["lexemes"])


def test_analysis_percolates_morphology_to_syntax(demo):
    [fs] = analyze_word(demo, "badest")
    assert fs.follow("morph|mhead|person") == fs.follow("synsem|loc|cat|head|person")
    assert fs.type_at("synsem|loc|cat|head|person") == "2"
    assert fs.type_at("synsem|loc|content") == "bathe_rel"
    assert fs.type_at("morph|mhead|epenthese") == "+"


def test_first_person_form_has_no_umlaut(demo):
    [fs] = analyze_word(demo, "rate")
    assert fs.type_at("morph|mhead|umlaut") == "no_umlaut"
    assert fs.type_at("morph|mhead|person") == "1"
    # while the stem itself still carries its umlaut class
    assert fs.type_at("morph|arg|mhead|umlaut") == "aou_umlaut"


def test_decomposed_input_is_normalized(demo):
    nfd = unicodedata.normalize("NFD", "rät")
    assert nfd != "rät"
    assert analyze_word(demo, nfd) == analyze_word(demo, "rät")


def test_every_oracle_word_round_trips(demo):
    for surface, words in oracles.language().items():
        results = analyze_word(demo, surface)
        assert len(results) == len(words)
        for fs in results:
            assert generate_word(demo, fs) == [surface]


def test_readings_multiply_analyses():
    g = variant(lexemes='lexeme "sag" : lexeme [subcat: <np>, content: say_rel].')
    results = analyze_word(g, "sagt")
    assert len(results) == 2
    assert {r.type_at("synsem|loc|cat|subcat|rest") for r in results} == {"nelist", "elist"}


def test_unknown_stem_warns_and_keeps_analysis():
    g = variant(morphs='morph "gab" : marg [stem: "gab", '
                       'mhead: verb_stem [epenthese: \'-\', person: 3, umlaut: no_umlaut]].')
    assert any("gab" in p for p in g.problems())
    with pytest.warns(UnknownStemWarning):
        results = analyze_word(g, "gabt")
    # no lexeme, so subcat and content stay unconstrained
    assert len(results) == 1 and results[0].follow("synsem|loc|content") is None


def test_generation_from_features(demo):
    assert generate_from_spec(demo, [("stem", "bad"), ("person", "2"), ("tense", "pres")]) == ["badest"]
    assert generate_from_spec(demo, [("stem", "rat"), ("person", "1")]) == ["rate"]
    assert generate_from_spec(demo, [("stem", "sag")]) == ["sagt", "sagst", "sage"]
    assert generate_from_spec(demo, [("stem", "sag"), ("tense", "past")]) == []


def test_generation_needs_a_string(demo):
    with pytest.raises(InsufficientInstantiation):
        generate_from_spec(demo, [("person", "3")])


def test_generation_from_partial_structure(demo):
    h = demo.hierarchy
    partial = term_to_frozen(parse_term('word [morph: [mstring: "rAt+st"]]'), h, "word")
    assert generate_word(demo, partial) == ["rätst"]
    contradictory = term_to_frozen(
        parse_term('word [morph: [mstring: "rAt+st", mhead: [person: 3]]]'), h, "word")
    assert generate_word(demo, contradictory) == []


def test_resolve_feature(demo):
    h = demo.hierarchy
    assert resolve_feature(h, "tense", "pres") == (("morph", "mhead", "tense"), "tense_pres")
    assert resolve_feature(h, "person", "3") == (("morph", "mhead", "person"), "3")
    assert resolve_feature(h, "stem", "rat") == (("morph", "stem"), '"rat"')
    assert resolve_feature(h, "synsem|loc|content", "say_rel") == (
        ("synsem", "loc", "content"), "say_rel")
    with pytest.raises(ValueError):
        resolve_feature(h, "colour", "red")
    with pytest.raises(ValueError):
        resolve_feature(h, "tense", "future")


def test_candidate_words(demo):
    seqs = [tuple(e.key for e in s) for s in candidate_words(demo, max_affixes=1)]
    assert ("rAt",) in seqs and ("bad", "+st") in seqs
    assert len(seqs) == 3 + 3 * 3


def test_head_complement_builds_phrase(demo):
    st_ = demo.store()
    head = build_entry(st_, parse_term(
        "sign [synsem: [loc: [cat: [head: verb [person: 3], subcat: <np, pp>]]]]"), "sign")
    pp = build_entry(st_, parse_term("sign [synsem: pp]"), "sign")
    [phrase] = head_complement(demo, head, [pp])
    assert phrase.type_at("synsem|loc|cat|head|person") == "3"
    assert phrase.type_at("synsem|loc|cat|subcat|first") == "np"
    assert head_complement(demo, head, [pp, pp]) == []


def test_word_heads_combine_with_complements(demo):
    [word] = analyze_word(demo, "sagt")
    st_ = demo.store()
    sbar = build_entry(st_, parse_term("sign [synsem: sbar]"), "sign")
    [vp] = head_complement(demo, word, [sbar])
    assert vp.type_at("synsem|loc|cat|subcat|first") == "np"
    assert vp.type_at("synsem|loc|cat|subcat|rest") == "elist"
    assert vp.type_at("dtrs|head_dtr|phon") == '"sagt"'


def test_labeling_depth_is_bounded(demo):
    st_ = demo.store()
    head = build_entry(st_, parse_term("sign [synsem: [loc: [cat: [head: verb]]]]"), "sign")
    # an open subcat list has unboundedly many readings; the search stops
    store = demo.store()
    phrase = store.new_node("headed_phrase")
    assert store.path_put(phrase, "dtrs|head_dtr", store.build(head))
    assert store.path_put(phrase, "dtrs|comp_dtrs", "elist")
    count = sum(1 for _ in store.solutions(label=True, max_labels=6))
    assert store.truncated and 0 < count < 10


def test_grammar_files(tmp_path, demo):
    paths = {}
    for k, text in DEMO.items():
        paths[k] = tmp_path / f"g.{k}"
        paths[k].write_text(text, encoding="utf-8")
    g = Grammar.from_files(paths["grammar"], paths["rules"], paths["morphs"], paths["lexemes"])
    assert analyze_word(g, "rät") == analyze_word(demo, "rät")
    assert g.problems() == []


def test_broken_files_raise_grammar_error():
    with pytest.raises(GrammarError):
        variant(rules="r :: _ <=> x:y <=> _.")
    with pytest.raises(GrammarError):
        variant(morphs='morph "bad" : marg [stem: 3].')
    with pytest.raises(GrammarError):
        variant(grammar="type word.")


def test_trace_reports_commitments(demo):
    log = []
    analyze_word(demo, "badet", trace=log.append)
    assert any("commit epenthesis" in m for m in log)
    assert any(m.startswith("morph 'bad'") for m in log)
    assert any(m.startswith("accept") for m in log)


def test_analyses_are_independent_of_store_state(demo):
    a = analyze_word(demo, "sagst")
    b = analyze_word(demo, "sagst")
    assert a == b
    h = demo.hierarchy
    assert freeze(h, Store(h).build(a[0])) == a[0]


def test_no_warnings_for_known_stems(demo):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for w in oracles.language():
            analyze_word(demo, w)
