"""Black-box adversarial-attack toolkit for named entity recognition models."""

from .adapter import AdapterEndpoint, SimilarityScorer, TokenPrediction, connect
from .context_attack import ContextAttackConfig, ContextAttacker
from .corpus import (
    ColumnSpec,
    EntityInventory,
    EntitySpan,
    TaggedSentence,
    build_inventory,
    extract_spans,
    parse_conll,
    select_eligible,
    serialize_conll,
)
from .entity_attack import EntityAttackConfig, EntityAttacker, splice
from .errors import (
    AdapterError,
    ConfigurationError,
    NerbreakerError,
    ParseError,
    ProtocolError,
    VectorLoadError,
)
from .judge import EntityVerdict, ErrorClass, Status, judge_entity, token_correct
from .labels import Label
from .lexical import VectorStore, is_stopword, load_vectors
from .mock import MockModelSpec, MockServer
from .records import AttackRecord, read_records, write_records

__version__ = "0.1.0"

__all__ = [
    "AdapterEndpoint",
    "AdapterError",
    "AttackRecord",
    "ColumnSpec",
    "ConfigurationError",
    "ContextAttackConfig",
    "ContextAttacker",
    "EntityAttackConfig",
    "EntityAttacker",
    "EntityInventory",
    "EntitySpan",
    "EntityVerdict",
    "ErrorClass",
    "Label",
    "MockModelSpec",
    "MockServer",
    "NerbreakerError",
    "ParseError",
    "ProtocolError",
    "SimilarityScorer",
    "Status",
    "TaggedSentence",
    "TokenPrediction",
    "VectorLoadError",
    "VectorStore",
    "build_inventory",
    "connect",
    "extract_spans",
    "is_stopword",
    "judge_entity",
    "load_vectors",
    "parse_conll",
    "read_records",
    "select_eligible",
    "serialize_conll",
    "splice",
    "token_correct",
    "write_records",
]
