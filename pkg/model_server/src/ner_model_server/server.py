"""Reference model server for the black-box NER attack protocol.

Wraps any Hugging Face token-classification checkpoint with IOB labels,
a sentence encoder for similarity, and the heuristic POS tagger, behind
newline-delimited JSON on stdio or a single-endpoint HTTP server (see
protocol/PROTOCOL.md at the repository root).

Raw logits are forwarded untouched; the engine on the other side of the
wire differences raw scores, so applying softmax here would break it.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import torch

from .alignment import AlignmentError, first_piece_rows
from .encoder import SentenceEncoder
from .pos_tagger import tag_sentence

PROTOCOL_VERSION = "1.0"


@dataclass
class ServerConfig:
    model: str
    encoder: str | None = None  # defaults to the NER model's base weights
    device: str = "cpu"
    batch_size: int = 16
    transport: str = "stdio"  # "stdio" | "http"
    port: int = 8750

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")


def canonical_tag_order(labels: list[str]) -> list[str]:
    """O first, then entity labels sorted by serialized form.

    This is also the argmax tie-break order the protocol requires.
    """
    rest = sorted(l for l in labels if l != "O")
    return ["O"] + rest


class NerModelServer:
    def __init__(self, cfg: ServerConfig):
        from transformers import AutoModel, AutoModelForTokenClassification, AutoTokenizer

        self.cfg = cfg
        self.tokenizer = AutoTokenizer.from_pretrained(cfg.model)
        self.model = (
            AutoModelForTokenClassification.from_pretrained(cfg.model)
            .to(cfg.device)
            .eval()
        )
        labels = [
            self.model.config.id2label[i] for i in range(self.model.config.num_labels)
        ]
        if "O" not in labels:
            raise ValueError(f"model labels must include 'O', got {labels}")
        self.tag_set = canonical_tag_order(labels)
        self._tag_rank = {t: i for i, t in enumerate(self.tag_set)}
        self._label_ids = labels  # index -> label string, model order

        encoder_name = cfg.encoder or cfg.model
        encoder_tok = (
            self.tokenizer
            if encoder_name == cfg.model
            else AutoTokenizer.from_pretrained(encoder_name)
        )
        self.encoder = SentenceEncoder(
            AutoModel.from_pretrained(encoder_name),
            encoder_tok,
            device=cfg.device,
            batch_size=cfg.batch_size,
        )
        self.model_id = f"hf:{cfg.model.rstrip('/').split('/')[-1]}"
        self.deterministic = cfg.device == "cpu"

    # -- ops ----------------------------------------------------------------

    def handle(self, request: dict) -> dict:
        try:
            op = request.get("op")
            if op == "handshake":
                return {
                    "ok": True,
                    "protocol": PROTOCOL_VERSION,
                    "model_id": self.model_id,
                    "tag_set": self.tag_set,
                    "capabilities": ["predict", "pos", "similarity"],
                    "deterministic": self.deterministic,
                }
            if op == "predict":
                return {"ok": True, "predictions": self._predict(request["sentences"])}
            if op == "pos":
                return {
                    "ok": True,
                    "tags": [tag_sentence(list(s)) for s in request["sentences"]],
                }
            if op == "similarity":
                pairs = [(list(a), list(b)) for a, b in request["pairs"]]
                return {"ok": True, "similarities": self.encoder.similarities(pairs)}
            return {"ok": False, "error": f"unknown op {op!r}"}
        except (KeyError, TypeError, ValueError, AlignmentError) as exc:
            return {"ok": False, "error": f"{type(exc).__name__}: {exc}"}

    @torch.no_grad()
    def _predict(self, sentences: list[list[str]]) -> list[list[dict]]:
        rows: list[list[dict]] = []
        for start in range(0, len(sentences), self.cfg.batch_size):
            chunk = [list(s) for s in sentences[start : start + self.cfg.batch_size]]
            if not chunk:
                continue
            if any(not s for s in chunk):
                raise ValueError("empty sentence in predict request")
            enc = self.tokenizer(
                chunk,
                is_split_into_words=True,
                return_tensors="pt",
                padding=True,
                truncation=True,
            ).to(self.cfg.device)
            logits = self.model(**enc).logits.cpu()
            for b, sentence in enumerate(chunk):
                word_rows = first_piece_rows(enc.word_ids(b), len(sentence))
                out = []
                for piece_row in word_rows:
                    scores = {
                        self._label_ids[i]: float(logits[b, piece_row, i])
                        for i in range(len(self._label_ids))
                    }
                    label = max(
                        scores, key=lambda t: (scores[t], -self._tag_rank[t])
                    )
                    out.append({"label": label, "scores": scores})
                rows.append(out)
        return rows


def serve_stdio(server: NerModelServer) -> None:
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            reply = {"ok": False, "error": f"bad JSON: {exc}"}
        else:
            reply = server.handle(request)
        sys.stdout.write(json.dumps(reply, ensure_ascii=False) + "\n")
        sys.stdout.flush()


def serve_http(server: NerModelServer, port: int) -> None:
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            try:
                request = json.loads(self.rfile.read(length))
                reply = server.handle(request)
            except json.JSONDecodeError as exc:
                reply = {"ok": False, "error": f"bad JSON: {exc}"}
            body = json.dumps(reply, ensure_ascii=False).encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, fmt, *args):
            print(fmt % args, file=sys.stderr)

    ThreadingHTTPServer(("127.0.0.1", port), Handler).serve_forever()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        description="Serve a token-classification checkpoint over the attack protocol"
    )
    parser.add_argument("--model", required=True, help="checkpoint path or hub name")
    parser.add_argument("--encoder", help="similarity encoder (default: the model)")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--port", type=int, help="serve HTTP on this port instead of stdio")
    args = parser.parse_args(argv)

    cfg = ServerConfig(
        model=args.model,
        encoder=args.encoder,
        device=args.device,
        batch_size=args.batch_size,
        transport="http" if args.port else "stdio",
        port=args.port or 8750,
    )
    # model loading must not pollute stdout: it is the protocol channel
    with contextlib.redirect_stdout(sys.stderr):
        server = NerModelServer(cfg)
    print(f"serving {server.model_id} over {cfg.transport}", file=sys.stderr)
    if cfg.transport == "http":
        serve_http(server, cfg.port)
    else:
        serve_stdio(server)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
