"""Sentence embeddings for the similarity capability.

Masked mean pooling over a transformer's last hidden states; pair
similarity is the cosine mapped affinely from [-1, 1] to [0, 1].
"""

from __future__ import annotations

import torch


class SentenceEncoder:
    def __init__(self, model, tokenizer, device: str = "cpu", batch_size: int = 16):
        self.model = model.to(device).eval()
        self.tokenizer = tokenizer
        self.device = device
        self.batch_size = batch_size

    @torch.no_grad()
    def embed(self, sentences: list[list[str]]) -> torch.Tensor:
        vectors = []
        for start in range(0, len(sentences), self.batch_size):
            chunk = sentences[start : start + self.batch_size]
            enc = self.tokenizer(
                chunk,
                is_split_into_words=True,
                return_tensors="pt",
                padding=True,
                truncation=True,
            ).to(self.device)
            hidden = self.model(**enc).last_hidden_state
            mask = enc["attention_mask"].unsqueeze(-1).to(hidden.dtype)
            summed = (hidden * mask).sum(dim=1)
            counts = mask.sum(dim=1).clamp(min=1)
            vectors.append(summed / counts)
        return torch.cat(vectors, dim=0)

    def similarities(self, pairs: list[tuple[list[str], list[str]]]) -> list[float]:
        flat: list[list[str]] = []
        for a, b in pairs:
            flat.append(list(a))
            flat.append(list(b))
        embedded = self.embed(flat)
        out = []
        for i in range(0, len(flat), 2):
            cos = torch.nn.functional.cosine_similarity(
                embedded[i : i + 1], embedded[i + 1 : i + 2]
            ).item()
            out.append((max(-1.0, min(1.0, cos)) + 1.0) / 2.0)
        return out
