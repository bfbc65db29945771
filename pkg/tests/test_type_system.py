import itertools

import oracles
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morphounify.type_system import (
    TOP,
    AmbiguousMeet,
    AppropriatenessConflict,
    HierarchyError,
    TypeHierarchy,
    UnknownType,
    literal,
)


def diamond() -> TypeHierarchy:
    h = TypeHierarchy()
    h.declare_type("a")
    h.declare_type("b")
    h.declare_type("c", ["a", "b"], {"f": "a"})
    h.declare_type("d", ["a", "b"])
    h.declare_type("e", ["c"])
    h.finalize()
    return h


def test_glb_basic(demo):
    h = demo.hierarchy
    assert h.glb("list", "nelist") == "nelist"
    assert h.glb("elist", "nelist") is None
    assert h.glb(TOP, "word") == "word"
    assert h.glb("string", literal("rat")) == '"rat"'
    assert h.glb(literal("rat"), literal("sag")) is None
    assert h.glb("boolean", literal("rat")) is None


def test_glb_matches_brute_force_on_demo(demo):
    h = demo.hierarchy
    names = h.types()
    for a, b in itertools.combinations_with_replacement(names, 2):
        expected = oracles.glb_oracle(h, a, b)
        assert not isinstance(expected, tuple)
        assert h.glb(a, b) == expected == h.glb(b, a)


def test_ambiguous_meet_is_reported():
    h = diamond()
    with pytest.raises(AmbiguousMeet):
        h.glb("a", "b")
    assert [str(p) for p in h.ambiguous_meets()]
    assert h.glb("c", "b") == "c"
    assert h.glb("e", "d") is None


def test_multiple_inheritance_collects_features():
    h = diamond()
    assert h.restriction("e", "f") == "a"
    assert h.subtype("e", "b") and h.subtype("e", "a")
    assert h.feature_carrier("a", "f") == "c"


def test_feature_carrier(demo):
    h = demo.hierarchy
    assert h.feature_carrier("list", "first") == "nelist"
    assert h.feature_carrier("sign", "morph") == "word"
    assert h.feature_carrier("sign", "phon") == "sign"
    assert h.feature_carrier("elist", "first") is None


def test_declaration_errors():
    h = TypeHierarchy()
    h.declare_type("a", features={"f": "a"})
    with pytest.raises(HierarchyError):
        h.declare_type("a")
    with pytest.raises(UnknownType):
        h.declare_type("b", ["nope"])
    with pytest.raises(HierarchyError):
        h.declare_type(literal("x"))
    h.declare_type("b")
    with pytest.raises(AppropriatenessConflict):
        h.declare_type("c", ["a"], {"f": "b"})


def test_unknown_feature_type_rejected():
    h = TypeHierarchy()
    h.declare_type("a", features={"f": "missing"})
    with pytest.raises(UnknownType):
        h.finalize()


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_glb_is_a_meet(demo, data):
    h = demo.hierarchy
    names = h.types()
    a = data.draw(st.sampled_from(names))
    b = data.draw(st.sampled_from(names))
    m = h.glb(a, b)
    if m is None:
        assert not (h.descendants(a) & h.descendants(b))
    else:
        assert h.subtype(m, a) and h.subtype(m, b)
        # every common subtype is below the meet
        for t in h.descendants(a) & h.descendants(b):
            assert h.subtype(t, m)
        assert h.glb(a, m) == m
