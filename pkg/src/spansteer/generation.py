"""Second stage: conditional summary generation from marker-annotated tokens.

The Seq2SeqAdapter interface is the slot for a real pretrained model. Two
desk-scale implementations ship with the package: a tiny trainable numpy
seq2seq with an additive copy-attention shortcut (enough capacity to overfit
small fixtures), and a deterministic echo stub that emits the sentences
containing marked spans, used to exercise controllability metrics.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence, runtime_checkable

import numpy as np

from .corpus import Document, TokenSpan, detokenize
from .marking import (
    MARKER_TOKENS,
    MarkedSequence,
    mark_spans,
    marked_sentence_flags,
)
from .nn import AdamW, softmax

logger = logging.getLogger(__name__)

BOS, EOS, UNK = "<bos>", "<eos>", "<unk>"


@dataclass(frozen=True)
class DecodeConfig:
    """Decoding knobs; defaults are conventional for summarization decoders
    and are recorded with every output rather than treated as ground truth."""

    beam: int = 4
    max_length: int = 142
    length_penalty: float = 2.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class GeneratorConfig:
    epochs: int = 5
    lr: float = 3e-5
    weight_decay: float = 0.0
    seed: int = 13
    val_beam: int = 1


Pair = tuple[MarkedSequence, tuple[str, ...]]


@runtime_checkable
class Seq2SeqAdapter(Protocol):
    """Trainable conditional generator over token sequences.

    ``train`` performs one pass over the pairs; the surrounding training
    loop owns epochs, validation, and checkpoint selection. Special tokens
    must stay atomic in the adapter's vocabulary.
    """

    def register_special_tokens(self, tokens: Sequence[str]) -> None: ...

    def train(self, pairs: Sequence[Pair], config: GeneratorConfig) -> float: ...

    def generate(self, tokens: Sequence[str],
                 decode: DecodeConfig) -> tuple[str, ...]: ...

    def state(self) -> dict: ...

    def load_state(self, state: dict) -> None: ...


class GenerationError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# Tiny trainable seq2seq
# --------------------------------------------------------------------------

class TinySeq2SeqAdapter:
    """Word-level conditional generator small enough to train in tests.

    Encoder: mean of input token embeddings. Decoder step: an MLP over
    [context; previous-token embedding] produces vocabulary logits, plus an
    additive copy score for every token present in the input (attention of
    the decoder state against the input embeddings). The copy path makes
    span-copy patterns learnable within a few passes over tiny datasets.
    """

    def __init__(self, dim: int = 32, hidden: int = 64, seed: int = 13):
        self.dim = dim
        self.hidden = hidden
        self.seed = seed
        self.special_tokens: list[str] = []
        self.vocab: list[str] = []
        self._index: dict[str, int] = {}
        self.params: dict[str, np.ndarray] = {}
        self._optimizer: AdamW | None = None

    # -- vocabulary ---------------------------------------------------------

    def register_special_tokens(self, tokens: Sequence[str]) -> None:
        for tok in tokens:
            if tok not in self.special_tokens:
                self.special_tokens.append(tok)

    def ensure_initialized(self, pairs: Sequence[Pair]) -> None:
        if self.params:
            return
        vocab = [BOS, EOS, UNK, *self.special_tokens]
        seen = set(vocab)
        for marked, summary in pairs:
            for tok in tuple(marked.tokens) + tuple(summary):
                if tok not in seen:
                    seen.add(tok)
                    vocab.append(tok)
        self.vocab = vocab
        self._index = {t: i for i, t in enumerate(vocab)}
        rng = np.random.default_rng(self.seed)
        v, d, h = len(vocab), self.dim, self.hidden
        self.params = {
            "emb": rng.normal(0.0, 0.1, (v, d)),
            "w1": rng.normal(0.0, 0.1, (2 * d, h)),
            "b1": np.zeros(h),
            "w2": rng.normal(0.0, 0.1, (h, v)),
            "b2": np.zeros(v),
            "attn": rng.normal(0.0, 0.1, (h, d)),
        }
        self._optimizer = None

    def _ids(self, tokens: Sequence[str]) -> list[int]:
        unk = self._index[UNK]
        return [self._index.get(t, unk) for t in tokens]

    # -- forward ------------------------------------------------------------

    def _step_logits(self, input_ids: list[int], prev_id: int):
        p = self.params
        e_doc = p["emb"][input_ids]
        context = e_doc.mean(axis=0)
        z = np.concatenate([context, p["emb"][prev_id]])
        act = np.tanh(z @ p["w1"] + p["b1"])
        query = act @ p["attn"]
        attention = e_doc @ query
        logits = act @ p["w2"] + p["b2"]
        np.add.at(logits, input_ids, attention)
        return e_doc, context, z, act, query, attention, logits

    def _pair_loss_and_grads(self, input_ids: list[int], target_ids: list[int]):
        p = self.params
        grads = {k: np.zeros_like(v) for k, v in p.items()}
        prevs = [self._index[BOS]] + target_ids[:-1]
        n = len(input_ids)
        steps = len(target_ids)
        loss = 0.0
        d_context_total = np.zeros(self.dim)
        d_edoc_total = np.zeros((n, self.dim))
        for prev, target in zip(prevs, target_ids):
            e_doc, _, z, act, query, _, logits = self._step_logits(input_ids, prev)
            probs = softmax(logits)
            loss -= float(np.log(probs[target] + 1e-12))
            d_logits = probs
            d_logits[target] -= 1.0
            d_logits /= steps
            grads["w2"] += np.outer(act, d_logits)
            grads["b2"] += d_logits
            d_att = d_logits[input_ids]
            d_query = e_doc.T @ d_att
            d_edoc_total += np.outer(d_att, query)
            grads["attn"] += np.outer(act, d_query)
            d_act = p["w2"] @ d_logits + p["attn"] @ d_query
            d_pre = d_act * (1.0 - act * act)
            grads["w1"] += np.outer(z, d_pre)
            grads["b1"] += d_pre
            d_z = p["w1"] @ d_pre
            d_context_total += d_z[: self.dim]
            grads["emb"][prev] += d_z[self.dim :]
        for pos, token_id in enumerate(input_ids):
            grads["emb"][token_id] += d_context_total / n + d_edoc_total[pos]
        return loss / steps, grads

    # -- training / decoding ------------------------------------------------

    def train(self, pairs: Sequence[Pair], config: GeneratorConfig) -> float:
        """One pass over the pairs (per-pair AdamW updates); mean loss."""
        if not pairs:
            raise GenerationError("no training pairs")
        self.ensure_initialized(pairs)
        if self._optimizer is None:
            self._optimizer = AdamW(self.params, lr=config.lr,
                                    weight_decay=config.weight_decay)
        self._optimizer.lr = config.lr
        rng = np.random.default_rng(config.seed + self._optimizer.step_count)
        order = rng.permutation(len(pairs))
        losses = []
        eos = self._index[EOS]
        for idx in order:
            marked, summary = pairs[idx]
            input_ids = self._ids(marked.tokens)
            target_ids = self._ids(summary) + [eos]
            loss, grads = self._pair_loss_and_grads(input_ids, target_ids)
            self._optimizer.step(grads)
            losses.append(loss)
        return float(np.mean(losses))

    def generate(self, tokens: Sequence[str],
                 decode: DecodeConfig | None = None) -> tuple[str, ...]:
        if not self.params:
            raise GenerationError("adapter is untrained; no vocabulary built")
        decode = decode or DecodeConfig()
        input_ids = self._ids(tokens)
        if decode.beam <= 1:
            return self._greedy(input_ids, decode.max_length)
        return self._beam(input_ids, decode)

    def _greedy(self, input_ids: list[int], max_length: int) -> tuple[str, ...]:
        prev = self._index[BOS]
        eos = self._index[EOS]
        out: list[int] = []
        for _ in range(max_length):
            *_, logits = self._step_logits(input_ids, prev)
            nxt = int(np.argmax(logits))
            if nxt == eos:
                break
            out.append(nxt)
            prev = nxt
        return tuple(self.vocab[i] for i in out)

    def _beam(self, input_ids: list[int], decode: DecodeConfig) -> tuple[str, ...]:
        eos = self._index[EOS]
        bos = self._index[BOS]

        def length_norm(logprob: float, length: int) -> float:
            penalty = ((5.0 + length) / 6.0) ** decode.length_penalty
            return logprob / penalty

        beams: list[tuple[float, list[int], bool]] = [(0.0, [bos], False)]
        for _ in range(decode.max_length):
            if all(done for _, _, done in beams):
                break
            candidates: list[tuple[float, list[int], bool]] = []
            for logprob, seq, done in beams:
                if done:
                    candidates.append((logprob, seq, done))
                    continue
                *_, logits = self._step_logits(input_ids, seq[-1])
                logprobs = np.log(softmax(logits) + 1e-12)
                top = np.argsort(-logprobs)[: decode.beam]
                for token_id in top:
                    candidates.append((logprob + float(logprobs[token_id]),
                                       seq + [int(token_id)],
                                       int(token_id) == eos))
            candidates.sort(key=lambda c: -length_norm(c[0], len(c[1]) - 1))
            beams = candidates[: decode.beam]
        best = max(beams, key=lambda c: length_norm(c[0], len(c[1]) - 1))
        out = [i for i in best[1][1:] if i != eos]
        return tuple(self.vocab[i] for i in out)

    # -- persistence --------------------------------------------------------

    def state(self) -> dict:
        return {
            "dim": self.dim, "hidden": self.hidden, "seed": self.seed,
            "special_tokens": list(self.special_tokens),
            "vocab": list(self.vocab),
            "params": {k: v.copy() for k, v in self.params.items()},
        }

    def load_state(self, state: dict) -> None:
        self.dim = state["dim"]
        self.hidden = state["hidden"]
        self.seed = state["seed"]
        self.special_tokens = list(state["special_tokens"])
        self.vocab = list(state["vocab"])
        self._index = {t: i for i, t in enumerate(self.vocab)}
        self.params = {k: np.array(v) for k, v in state["params"].items()}
        self._optimizer = None


# --------------------------------------------------------------------------
# Echo stub
# --------------------------------------------------------------------------

class EchoAdapter:
    """Deterministic untrained generator: emits the sentences that contain
    marked spans (markers removed), or the first sentence when nothing is
    marked. ``unmarked_lead`` optionally prepends that many additional
    unmarked sentences, simulating a verbose model."""

    def __init__(self, unmarked_lead: int = 0):
        self.unmarked_lead = unmarked_lead

    def register_special_tokens(self, tokens: Sequence[str]) -> None:
        pass

    def train(self, pairs: Sequence[Pair], config: GeneratorConfig) -> float:
        return 0.0

    def generate(self, tokens: Sequence[str],
                 decode: DecodeConfig | None = None) -> tuple[str, ...]:
        sentences = marked_sentence_flags(tokens)
        marked = [toks for toks, flagged in sentences if flagged]
        extra = [toks for toks, flagged in sentences if not flagged]
        out: list[str] = []
        for toks in extra[: self.unmarked_lead]:
            out.extend(toks)
        if marked:
            for toks in marked:
                out.extend(toks)
        elif sentences and not out:
            out.extend(sentences[0][0])
        return tuple(out)

    def state(self) -> dict:
        return {"unmarked_lead": self.unmarked_lead}

    def load_state(self, state: dict) -> None:
        self.unmarked_lead = state["unmarked_lead"]


# --------------------------------------------------------------------------
# Training loop and inference
# --------------------------------------------------------------------------

@dataclass
class GenerationCheckpoint:
    adapter: Seq2SeqAdapter
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    decode_defaults: DecodeConfig = field(default_factory=DecodeConfig)
    config: GeneratorConfig = field(default_factory=GeneratorConfig)


def _validation_rouge2(adapter: Seq2SeqAdapter, pairs: Sequence[Pair],
                       beam: int) -> float:
    from .rouge import rouge_2

    decode = DecodeConfig(beam=beam)
    scores = []
    for marked, summary in pairs:
        generated = adapter.generate(marked.tokens, decode)
        scores.append(rouge_2(generated, summary).f1)
    return float(np.mean(scores)) if scores else 0.0


def train_generator(pairs: Sequence[Pair], adapter: Seq2SeqAdapter,
                    config: GeneratorConfig | None = None,
                    validation_pairs: Sequence[Pair] | None = None,
                    decode_defaults: DecodeConfig | None = None) -> GenerationCheckpoint:
    """Epoch loop with per-epoch validation ROUGE-2 F1; returns the best
    epoch's checkpoint."""
    config = config or GeneratorConfig()
    decode_defaults = decode_defaults or DecodeConfig()
    pairs = list(pairs)
    if not pairs:
        raise GenerationError("training set is empty")
    if validation_pairs is not None and len(validation_pairs) == 0:
        raise GenerationError("validation set is empty")
    val = list(validation_pairs) if validation_pairs is not None else pairs

    adapter.register_special_tokens(list(MARKER_TOKENS))
    if hasattr(adapter, "ensure_initialized"):
        adapter.ensure_initialized(pairs)
    if config.epochs == 0:
        return GenerationCheckpoint(adapter=adapter, config=config,
                                    decode_defaults=decode_defaults)

    history: list[dict] = []
    best: tuple[float, int, dict] | None = None
    for epoch in range(1, config.epochs + 1):
        loss = adapter.train(pairs, config)
        val_r2 = _validation_rouge2(adapter, val, config.val_beam)
        history.append({"epoch": epoch, "train_loss": loss,
                        "val_rouge2_f1": val_r2})
        logger.info("generator epoch %d: loss=%.4f val ROUGE-2 F1=%.4f",
                    epoch, loss, val_r2)
        if best is None or val_r2 > best[0]:
            best = (val_r2, epoch, adapter.state())
    assert best is not None
    _, best_epoch, state = best
    adapter.load_state(state)
    return GenerationCheckpoint(adapter=adapter, history=history,
                                best_epoch=best_epoch, config=config,
                                decode_defaults=decode_defaults)


@dataclass(frozen=True)
class SummaryResult:
    doc_id: str
    spans: tuple[TokenSpan, ...]
    summary_tokens: tuple[str, ...]
    decode_config: dict

    @property
    def summary_text(self) -> str:
        return detokenize(self.summary_tokens)

    def to_record(self) -> dict:
        return {
            "id": self.doc_id,
            "spans": [[s.start, s.end] for s in self.spans],
            "summary": self.summary_text,
            "summary_tokens": list(self.summary_tokens),
            "decode_config": self.decode_config,
        }


def summarize(doc: Document, spans: Sequence[TokenSpan],
              checkpoint: GenerationCheckpoint,
              decode: DecodeConfig | None = None) -> SummaryResult:
    """Mark the given (non-overlapping) spans and generate a summary."""
    decode = decode or checkpoint.decode_defaults
    marked = mark_spans(doc.tokens, spans)
    try:
        tokens = checkpoint.adapter.generate(marked.tokens, decode)
    except Exception as exc:
        raise GenerationError(f"generation failed for document {doc.id!r}: "
                              f"{exc}") from exc
    return SummaryResult(doc_id=doc.id, spans=tuple(sorted(spans)),
                         summary_tokens=tuple(tokens),
                         decode_config=decode.to_dict())


def save_generation_output(results: Iterable[SummaryResult],
                           path: str | Path) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8") as fh:
        for result in results:
            fh.write(json.dumps(result.to_record(), ensure_ascii=False) + "\n")
            n += 1
    return n


def load_generation_output(path: str | Path) -> list[SummaryResult]:
    results = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            results.append(SummaryResult(
                doc_id=record["id"],
                spans=tuple(TokenSpan(s, e) for s, e in record["spans"]),
                summary_tokens=tuple(record["summary_tokens"]),
                decode_config=record["decode_config"],
            ))
    return results


# --------------------------------------------------------------------------
# Checkpoint I/O
# --------------------------------------------------------------------------

_ADAPTER_TYPES = {"TinySeq2SeqAdapter": TinySeq2SeqAdapter,
                  "EchoAdapter": EchoAdapter}


def save_generator(checkpoint: GenerationCheckpoint, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    adapter = checkpoint.adapter
    state = adapter.state()
    arrays = {}
    meta_state: dict = {}
    for key, value in state.items():
        if key == "params":
            for pk, pv in value.items():
                arrays[f"param_{pk}"] = pv
        else:
            meta_state[key] = value
    np.savez(directory / "state.npz", **(arrays or {"empty": np.zeros(1)}))
    manifest = {
        "kind": "generator",
        "adapter": type(adapter).__name__,
        "state": meta_state,
        "decode_defaults": checkpoint.decode_defaults.to_dict(),
        "best_epoch": checkpoint.best_epoch,
        "history": checkpoint.history,
        "config": {"epochs": checkpoint.config.epochs, "lr": checkpoint.config.lr,
                   "weight_decay": checkpoint.config.weight_decay,
                   "seed": checkpoint.config.seed,
                   "val_beam": checkpoint.config.val_beam},
    }
    (directory / "config.json").write_text(json.dumps(manifest, indent=2))


def load_generator(directory: str | Path) -> GenerationCheckpoint:
    directory = Path(directory)
    manifest = json.loads((directory / "config.json").read_text())
    adapter_cls = _ADAPTER_TYPES.get(manifest["adapter"])
    if adapter_cls is None:
        raise GenerationError(f"unknown adapter type {manifest['adapter']!r}")
    adapter = adapter_cls()
    arrays = np.load(directory / "state.npz")
    state = dict(manifest["state"])
    params = {key[len("param_"):]: np.array(arrays[key])
              for key in arrays.files if key.startswith("param_")}
    if params:
        state["params"] = params
    adapter.load_state(state)
    cfg = manifest["config"]
    dd = manifest["decode_defaults"]
    return GenerationCheckpoint(
        adapter=adapter,
        history=manifest.get("history", []),
        best_epoch=manifest.get("best_epoch", 0),
        decode_defaults=DecodeConfig(beam=dd["beam"], max_length=dd["max_length"],
                                     length_penalty=dd["length_penalty"]),
        config=GeneratorConfig(epochs=cfg["epochs"], lr=cfg["lr"],
                               weight_decay=cfg["weight_decay"], seed=cfg["seed"],
                               val_beam=cfg["val_beam"]),
    )
