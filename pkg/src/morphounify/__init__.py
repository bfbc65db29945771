"""Bidirectional morphological analysis and generation with typed feature
structures, delayed constraints and extended two-level rules."""

from .constraints import ConstraintSystem, check_antecedent, concat, fs_append, license, wake
from .feature_structures import (
    Checkpoint,
    EngineError,
    Frozen,
    Node,
    Store,
    UnificationFailure,
    format_avm,
    format_term,
    freeze,
    from_json,
    subsumes,
    to_json,
)
from .grammar import (
    Grammar,
    GrammarError,
    InsufficientInstantiation,
    UnknownStemWarning,
    analyze_word,
    generate_from_spec,
    generate_word,
    load_grammar,
)
from .twolevel import Alphabet, Morphology, TwoLevelRule, compile_rules, parse_rules
from .type_system import AmbiguousMeet, TypeHierarchy

__version__ = "0.1.0"
