"""Salient span classifier: first stage of the two-stage model.

A span is represented by concatenating the encoder vectors of its first and
last tokens; a linear head scores it. Training uses a class-balanced binary
cross-entropy so positive and negative spans contribute equally, and model
selection uses precision@1 on the validation set.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Protocol, Sequence, runtime_checkable

import numpy as np

from .corpus import AnnotatedExample, Document, TokenSpan
from .nn import AdamW, sigmoid, stable_token_hash

logger = logging.getLogger(__name__)


@runtime_checkable
class TokenEncoder(Protocol):
    """Per-token vector encoder over corpus word tokens.

    ``encode`` returns one row per token, truncated to ``max_input_tokens``.
    """

    dim: int
    max_input_tokens: int

    def encode(self, tokens: Sequence[str]) -> np.ndarray: ...


class HashedFrozenEncoder:
    """Deterministic random-projection encoder; identical across runs and
    platforms. Not trainable."""

    trainable = False

    def __init__(self, dim: int = 16, max_input_tokens: int = 512, seed: int = 13):
        self.dim = dim
        self.max_input_tokens = max_input_tokens
        self.seed = seed
        self._cache: dict[str, np.ndarray] = {}

    def _vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            rng = np.random.default_rng(stable_token_hash(token, 2**63, self.seed))
            vec = rng.standard_normal(self.dim)
            vec /= np.linalg.norm(vec) + 1e-12
            self._cache[token] = vec
        return vec

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        used = tokens[: self.max_input_tokens]
        if not used:
            return np.zeros((0, self.dim))
        return np.stack([self._vector(t) for t in used])


class TinyTrainableEncoder:
    """Hashed-bucket embedding table that can be fine-tuned with the head."""

    trainable = True

    def __init__(self, dim: int = 16, buckets: int = 2048,
                 max_input_tokens: int = 512, seed: int = 13):
        self.dim = dim
        self.buckets = buckets
        self.max_input_tokens = max_input_tokens
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.embedding = rng.normal(0.0, 0.5, (buckets, dim))

    def token_ids(self, tokens: Sequence[str]) -> list[int]:
        return [stable_token_hash(t, self.buckets, self.seed)
                for t in tokens[: self.max_input_tokens]]

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        ids = self.token_ids(tokens)
        if not ids:
            return np.zeros((0, self.dim))
        return self.embedding[ids]

    def state(self) -> dict[str, np.ndarray]:
        return {"embedding": self.embedding}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        self.embedding = np.array(state["embedding"])


@dataclass
class ClassifierHead:
    """Linear scorer over 2d span representations."""

    weights: np.ndarray
    bias: float

    @classmethod
    def init(cls, encoder_dim: int, seed: int = 13) -> "ClassifierHead":
        rng = np.random.default_rng(seed)
        return cls(weights=rng.normal(0.0, 0.1, 2 * encoder_dim), bias=0.0)

    def score(self, representation: np.ndarray) -> float:
        return float(representation @ self.weights + self.bias)

    def copy(self) -> "ClassifierHead":
        return ClassifierHead(self.weights.copy(), self.bias)


@dataclass(frozen=True)
class SpanScore:
    span: TokenSpan
    score: float

    @property
    def probability(self) -> float:
        return float(sigmoid(self.score))


def span_representation(encodings: np.ndarray, span: TokenSpan) -> np.ndarray:
    """Concatenated encoder vectors of the span's first and last tokens;
    a single-token span concatenates the same vector with itself."""
    if span.end >= len(encodings):
        raise ValueError(
            f"span ({span.start}, {span.end}) beyond encoded range "
            f"{len(encodings)}"
        )
    return np.concatenate([encodings[span.start], encodings[span.end]])


# --------------------------------------------------------------------------
# Class-balanced binary cross-entropy
# --------------------------------------------------------------------------

def _bce_with_logit(score: float, label: bool) -> float:
    # log(1 + exp(s)) - y*s, computed stably.
    return max(score, 0.0) - score * float(label) + math.log1p(math.exp(-abs(score)))


def _class_mean(values: list[float]) -> float:
    # Exact rational mean, rounded once: makes the loss bit-identical under
    # m-fold duplication of a class for any m.
    return float(sum(Fraction(v) for v in values) / len(values))


def balanced_bce_loss(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Mean BCE per class, averaged so both classes contribute equally.

    With only one class present, the loss is that class's mean BCE.
    """
    if len(scores) != len(labels) or len(scores) == 0:
        raise ValueError("scores and labels must be nonempty and equal-length")
    pos = [_bce_with_logit(s, True) for s, y in zip(scores, labels) if y]
    neg = [_bce_with_logit(s, False) for s, y in zip(scores, labels) if not y]
    if pos and neg:
        return 0.5 * _class_mean(pos) + 0.5 * _class_mean(neg)
    return _class_mean(pos or neg)


def balanced_bce_grad(scores: Sequence[float], labels: Sequence[bool]) -> np.ndarray:
    """d loss / d score for every span."""
    if len(scores) != len(labels) or len(scores) == 0:
        raise ValueError("scores and labels must be nonempty and equal-length")
    labels_arr = np.asarray(labels, dtype=bool)
    n_pos = int(labels_arr.sum())
    n_neg = len(labels_arr) - n_pos
    probs = sigmoid(np.asarray(scores, dtype=float))
    grad = np.where(labels_arr, probs - 1.0, probs)
    if n_pos and n_neg:
        grad = grad * np.where(labels_arr, 0.5 / n_pos, 0.5 / n_neg)
    else:
        grad = grad / len(labels_arr)
    return grad


def head_loss_and_grads(head: ClassifierHead, representations: np.ndarray,
                        labels: Sequence[bool]):
    """Loss plus gradients w.r.t. head weights, bias, and representations."""
    scores = representations @ head.weights + head.bias
    loss = balanced_bce_loss(scores.tolist(), list(labels))
    dscores = balanced_bce_grad(scores.tolist(), list(labels))
    d_weights = representations.T @ dscores
    d_bias = float(dscores.sum())
    d_reps = np.outer(dscores, head.weights)
    return loss, d_weights, d_bias, d_reps


# --------------------------------------------------------------------------
# Inference
# --------------------------------------------------------------------------

def candidate_spans(doc: Document, span_type: str) -> list[TokenSpan]:
    if span_type == "sentence":
        return list(doc.sentences)
    phrase_type = "np" if span_type == "qa" else span_type
    return [p.span for p in doc.phrases_of_type(phrase_type)]


def score_spans(doc: Document, candidates: Sequence[TokenSpan],
                encoder: TokenEncoder, head: ClassifierHead) -> list[SpanScore]:
    """All in-range candidates scored and ranked (score desc, then span)."""
    encodings = encoder.encode(doc.tokens)
    in_range = [s for s in candidates if s.end < len(encodings)]
    dropped = len(candidates) - len(in_range)
    if dropped:
        logger.info("document %s: dropped %d candidate span(s) beyond the "
                    "encoder's %d-token limit", doc.id, dropped,
                    encoder.max_input_tokens)
    scored = [SpanScore(span, head.score(span_representation(encodings, span)))
              for span in in_range]
    scored.sort(key=lambda s: (-s.score, s.span.start, s.span.end))
    return scored


def predict_top_k(doc: Document, candidates: Sequence[TokenSpan], k: int,
                  encoder: TokenEncoder, head: ClassifierHead) -> list[SpanScore]:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return score_spans(doc, candidates, encoder, head)[:k]


def precision_recall_at_k(predicted: Sequence[SpanScore | TokenSpan],
                          oracle: Iterable[TokenSpan], k: int) -> dict[str, float]:
    """precision@k and recall@k of a ranked span list against the oracle set.

    An empty oracle defines recall as 1 (nothing was missed); precision is
    computed normally.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    top = [p.span if isinstance(p, SpanScore) else p for p in predicted[:k]]
    oracle_set = set(oracle)
    hits = sum(1 for span in top if span in oracle_set)
    recall = 1.0 if not oracle_set else hits / len(oracle_set)
    return {"precision": hits / k, "recall": recall}


# --------------------------------------------------------------------------
# Training
# --------------------------------------------------------------------------

@dataclass
class ClassifierConfig:
    epochs: int = 3
    lr: float = 3e-5
    weight_decay: float = 0.01
    seed: int = 13
    finetune_encoder: bool = True
    selection_metric: str = "precision@1"


@dataclass
class TrainedClassifier:
    head: ClassifierHead
    encoder: TokenEncoder
    span_type: str
    k: int
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    config: ClassifierConfig = field(default_factory=ClassifierConfig)

    def predict(self, doc: Document, k: int | None = None) -> list[SpanScore]:
        cands = candidate_spans(doc, self.span_type)
        if not cands:
            return []
        return predict_top_k(doc, cands, k or self.k, self.encoder, self.head)


def _example_batch(ex: AnnotatedExample, encoder: TokenEncoder):
    cands = candidate_spans(ex.document, ex.span_type or "np")
    encodings = encoder.encode(ex.document.tokens)
    in_range = [s for s in cands if s.end < len(encodings)]
    salient = {l.span for l in ex.oracle_spans if l.salient}
    labels = [s in salient for s in in_range]
    return encodings, in_range, labels, salient


def validation_precision_at_1(examples: Sequence[AnnotatedExample],
                              encoder: TokenEncoder,
                              head: ClassifierHead) -> float:
    hits, total = 0, 0
    for ex in examples:
        cands = candidate_spans(ex.document, ex.span_type or "np")
        if not cands:
            continue
        ranked = predict_top_k(ex.document, cands, 1, encoder, head)
        if not ranked:
            continue
        salient = {l.span for l in ex.oracle_spans if l.salient}
        hits += ranked[0].span in salient
        total += 1
    return hits / total if total else 0.0


def train_classifier(train_examples: Sequence[AnnotatedExample],
                     encoder: TokenEncoder,
                     config: ClassifierConfig | None = None,
                     validation: Sequence[AnnotatedExample] | None = None,
                     k: int = 1) -> TrainedClassifier:
    """Train the head (optionally fine-tuning the encoder) and return the
    epoch checkpoint with the best validation precision@1."""
    config = config or ClassifierConfig()
    train_examples = list(train_examples)
    if not train_examples:
        raise ValueError("training corpus is empty")
    if validation is not None and len(validation) == 0:
        raise ValueError("validation set is empty")
    val = list(validation) if validation is not None else train_examples
    span_type = train_examples[0].span_type
    if span_type is None:
        raise ValueError("training examples carry no span_type; run labeling first")

    head = ClassifierHead.init(encoder.dim, seed=config.seed)
    if config.epochs == 0:
        return TrainedClassifier(head=head, encoder=encoder, span_type=span_type,
                                 k=k, config=config)

    joint = config.finetune_encoder and getattr(encoder, "trainable", False)
    params: dict[str, np.ndarray] = {"w": head.weights,
                                     "b": np.array([head.bias])}
    if joint:
        params["emb"] = encoder.embedding
    optimizer = AdamW(params, lr=config.lr, weight_decay=config.weight_decay)

    rng = np.random.default_rng(config.seed)
    best: tuple[float, int, ClassifierHead, dict | None] | None = None
    history: list[dict] = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train_examples))
        losses = []
        for idx in order:
            ex = train_examples[idx]
            head.weights, head.bias = params["w"], float(params["b"][0])
            encodings, spans, labels, _ = _example_batch(ex, encoder)
            if not spans:
                continue
            reps = np.stack([span_representation(encodings, s) for s in spans])
            loss, d_w, d_b, d_reps = head_loss_and_grads(head, reps, labels)
            losses.append(loss)
            grads = {"w": d_w, "b": np.array([d_b])}
            if joint:
                d_emb = np.zeros_like(encoder.embedding)
                ids = encoder.token_ids(ex.document.tokens)
                half = encoder.dim
                for s, d_rep in zip(spans, d_reps):
                    d_emb[ids[s.start]] += d_rep[:half]
                    d_emb[ids[s.end]] += d_rep[half:]
                grads["emb"] = d_emb
            optimizer.step(grads)
        head.weights, head.bias = params["w"], float(params["b"][0])
        val_p1 = validation_precision_at_1(val, encoder, head)
        history.append({"epoch": epoch,
                        "train_loss": float(np.mean(losses)) if losses else 0.0,
                        "val_precision@1": val_p1})
        if best is None or val_p1 > best[0]:
            enc_state = ({k_: v.copy() for k_, v in encoder.state().items()}
                         if joint else None)
            best = (val_p1, epoch, head.copy(), enc_state)

    assert best is not None
    _, best_epoch, best_head, enc_state = best
    if joint and enc_state is not None:
        encoder.load_state(enc_state)
    return TrainedClassifier(head=best_head, encoder=encoder, span_type=span_type,
                             k=k, history=history, best_epoch=best_epoch,
                             config=config)


# --------------------------------------------------------------------------
# Checkpoint I/O
# --------------------------------------------------------------------------

def save_classifier(model: TrainedClassifier, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    arrays = {"head_weights": model.head.weights,
              "head_bias": np.array([model.head.bias])}
    encoder = model.encoder
    enc_spec: dict = {"type": type(encoder).__name__, "dim": encoder.dim,
                      "max_input_tokens": encoder.max_input_tokens,
                      "seed": getattr(encoder, "seed", None)}
    if isinstance(encoder, TinyTrainableEncoder):
        enc_spec["buckets"] = encoder.buckets
        arrays["encoder_embedding"] = encoder.embedding
    np.savez(directory / "weights.npz", **arrays)
    manifest = {
        "kind": "span_classifier",
        "span_type": model.span_type,
        "k": model.k,
        "selection_metric": model.config.selection_metric,
        "best_epoch": model.best_epoch,
        "encoder": enc_spec,
        "history": model.history,
        "config": {"epochs": model.config.epochs, "lr": model.config.lr,
                   "weight_decay": model.config.weight_decay,
                   "seed": model.config.seed,
                   "finetune_encoder": model.config.finetune_encoder},
    }
    (directory / "config.json").write_text(json.dumps(manifest, indent=2))


def load_classifier(directory: str | Path) -> TrainedClassifier:
    directory = Path(directory)
    manifest = json.loads((directory / "config.json").read_text())
    arrays = np.load(directory / "weights.npz")
    enc_spec = manifest["encoder"]
    if enc_spec["type"] == "TinyTrainableEncoder":
        encoder: TokenEncoder = TinyTrainableEncoder(
            dim=enc_spec["dim"], buckets=enc_spec["buckets"],
            max_input_tokens=enc_spec["max_input_tokens"],
            seed=enc_spec["seed"])
        encoder.load_state({"embedding": arrays["encoder_embedding"]})
    elif enc_spec["type"] == "HashedFrozenEncoder":
        encoder = HashedFrozenEncoder(dim=enc_spec["dim"],
                                      max_input_tokens=enc_spec["max_input_tokens"],
                                      seed=enc_spec["seed"])
    else:
        raise ValueError(f"unknown encoder type {enc_spec['type']!r}")
    head = ClassifierHead(weights=np.array(arrays["head_weights"]),
                          bias=float(arrays["head_bias"][0]))
    cfg = manifest["config"]
    return TrainedClassifier(
        head=head, encoder=encoder, span_type=manifest["span_type"],
        k=manifest["k"], history=manifest.get("history", []),
        best_epoch=manifest.get("best_epoch", 0),
        config=ClassifierConfig(epochs=cfg["epochs"], lr=cfg["lr"],
                                weight_decay=cfg["weight_decay"], seed=cfg["seed"],
                                finetune_encoder=cfg["finetune_encoder"]),
    )
