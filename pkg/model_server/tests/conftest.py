from __future__ import annotations

import os
import string

import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

LABELS = ["O", "B-LOC", "I-LOC", "B-PER", "I-PER"]
WHOLE_WORDS = [
    "the", "cat", "sat", "visited", "bought", "flowers", "republic",
    "of", "china", "in", "people", "every", "day",
]


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory) -> str:
    """A word-level-usable random BERT token classifier saved locally."""
    import torch
    from tokenizers import Tokenizer, normalizers, pre_tokenizers, processors
    from tokenizers.models import WordPiece
    from transformers import BertConfig, BertForTokenClassification, BertTokenizerFast

    directory = tmp_path_factory.mktemp("tiny_ckpt")
    vocab = (
        ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
        + list(string.ascii_lowercase)
        + ["##" + c for c in string.ascii_lowercase]
        + list(string.digits)
        + WHOLE_WORDS
        + [".", ","]
    )
    mapping = {w: i for i, w in enumerate(vocab)}
    core = Tokenizer(WordPiece(vocab=mapping, unk_token="[UNK]"))
    core.normalizer = normalizers.BertNormalizer(lowercase=True)
    core.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    core.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B:1 [SEP]:1",
        special_tokens=[("[CLS]", mapping["[CLS]"]), ("[SEP]", mapping["[SEP]"])],
    )
    tokenizer = BertTokenizerFast(tokenizer_object=core)

    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=128,
        num_labels=len(LABELS),
        id2label=dict(enumerate(LABELS)),
        label2id={l: i for i, l in enumerate(LABELS)},
    )
    torch.manual_seed(1234)
    model = BertForTokenClassification(config)
    model.save_pretrained(directory)
    tokenizer.save_pretrained(directory)
    return str(directory)


@pytest.fixture(scope="session")
def server(tiny_checkpoint):
    from ner_model_server.server import NerModelServer, ServerConfig

    return NerModelServer(ServerConfig(model=tiny_checkpoint))
