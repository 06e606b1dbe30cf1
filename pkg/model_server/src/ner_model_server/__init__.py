"""Reference model server for the nerbreaker adapter protocol."""

from .alignment import AlignmentError, align_subtokens, first_piece_rows
from .pos_tagger import tag_sentence, tag_word
from .server import NerModelServer, ServerConfig, canonical_tag_order

__all__ = [
    "AlignmentError",
    "NerModelServer",
    "ServerConfig",
    "align_subtokens",
    "canonical_tag_order",
    "first_piece_rows",
    "tag_sentence",
    "tag_word",
]
