"""Run configuration: one JSON document drives every pipeline command.

Adapter selections are resolved by name through a small registry so configs
stay plain data. Default operating span counts per dataset preset come from
validation sweeps at full scale and are only seeds for `sweep-k`.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

from .annotation import FixtureProvider, SpacyProvider, SyntacticProvider
from .classifier import (
    ClassifierConfig,
    HashedFrozenEncoder,
    TinyTrainableEncoder,
    TokenEncoder,
)
from .generation import (
    DecodeConfig,
    EchoAdapter,
    GeneratorConfig,
    Seq2SeqAdapter,
    TinySeq2SeqAdapter,
)
from .qa import (
    LexicalStubAnswerer,
    QuestionAnswerer,
    QuestionGenerator,
    TemplateStubGenerator,
)

DEFAULT_SEED = 13

# Operating points (spans passed to the generator) chosen by ROUGE-1 F1
# validation sweeps on the full-scale datasets.
DEFAULT_SPAN_COUNTS: dict[str, dict[str, int]] = {
    "cnn_dm": {"sentence": 3, "entity": 10, "np": 25, "qa": 20},
    "xsum": {"sentence": 1, "entity": 1, "np": 5, "qa": 1},
    "nytimes": {"sentence": 4, "entity": 15, "np": 45, "qa": 27},
}


def default_k(dataset: str, span_type: str) -> int:
    return DEFAULT_SPAN_COUNTS.get(dataset, DEFAULT_SPAN_COUNTS["cnn_dm"])[span_type]


def cache_dir() -> Path | None:
    value = os.environ.get("SPANSTEER_CACHE")
    return Path(value) if value else None


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    train_path: str | None = None
    validation_path: str | None = None
    input_path: str | None = None
    output_dir: str = "runs/latest"
    dataset: str = "cnn_dm"
    span_type: str = "qa"
    k: int | None = None
    seed: int = DEFAULT_SEED
    workers: int = 1

    encoder: str = "tiny"
    encoder_dim: int = 16
    encoder_buckets: int = 2048
    max_input_tokens: int = 512
    seq2seq: str = "tiny"
    seq2seq_dim: int = 32
    seq2seq_hidden: int = 64
    qg: str = "stub"
    qa: str = "stub"
    provider: str = "fixture"

    classifier_epochs: int = 3
    classifier_lr: float = 3e-5
    classifier_weight_decay: float = 0.01
    finetune_encoder: bool = True
    generator_epochs: int = 5
    generator_lr: float = 3e-5
    generator_weight_decay: float = 0.0

    decode_beam: int = 4
    decode_max_length: int = 142
    decode_length_penalty: float = 2.0

    classifier_dir: str | None = None
    generator_dir: str | None = None
    service_max_chars: int = 20000
    session_ttl_seconds: float = 1800.0

    def __post_init__(self) -> None:
        if self.span_type not in ("sentence", "entity", "np", "qa"):
            raise ConfigError(f"invalid span_type {self.span_type!r}")
        if self.k is not None and self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")

    @property
    def effective_k(self) -> int:
        return self.k if self.k is not None else default_k(self.dataset,
                                                           self.span_type)

    @classmethod
    def from_json(cls, path: str | Path) -> "RunConfig":
        data = json.loads(Path(path).read_text())
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    # -- adapter resolution --------------------------------------------------

    def build_encoder(self) -> TokenEncoder:
        if self.encoder == "tiny":
            return TinyTrainableEncoder(dim=self.encoder_dim,
                                        buckets=self.encoder_buckets,
                                        max_input_tokens=self.max_input_tokens,
                                        seed=self.seed)
        if self.encoder == "hash":
            return HashedFrozenEncoder(dim=self.encoder_dim,
                                       max_input_tokens=self.max_input_tokens,
                                       seed=self.seed)
        raise ConfigError(f"unknown encoder {self.encoder!r}")

    def build_seq2seq(self) -> Seq2SeqAdapter:
        if self.seq2seq == "tiny":
            return TinySeq2SeqAdapter(dim=self.seq2seq_dim,
                                      hidden=self.seq2seq_hidden, seed=self.seed)
        if self.seq2seq == "echo":
            return EchoAdapter()
        raise ConfigError(f"unknown seq2seq adapter {self.seq2seq!r}")

    def build_qg(self) -> QuestionGenerator:
        if self.qg == "stub":
            return TemplateStubGenerator()
        if self.qg.startswith(("cmd:", "http:")):
            from .adapter_wire import wire_question_generator
            return wire_question_generator(self.qg)
        raise ConfigError(f"unknown question generator {self.qg!r}")

    def build_qa(self) -> QuestionAnswerer:
        if self.qa == "stub":
            return LexicalStubAnswerer()
        if self.qa.startswith(("cmd:", "http:")):
            from .adapter_wire import wire_question_answerer
            return wire_question_answerer(self.qa)
        raise ConfigError(f"unknown question answerer {self.qa!r}")

    def build_provider(self) -> SyntacticProvider:
        if self.provider == "fixture":
            return FixtureProvider()
        if self.provider == "spacy":
            return SpacyProvider()
        raise ConfigError(f"unknown provider {self.provider!r}")

    def classifier_config(self) -> ClassifierConfig:
        return ClassifierConfig(epochs=self.classifier_epochs,
                                lr=self.classifier_lr,
                                weight_decay=self.classifier_weight_decay,
                                seed=self.seed,
                                finetune_encoder=self.finetune_encoder)

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(epochs=self.generator_epochs,
                               lr=self.generator_lr,
                               weight_decay=self.generator_weight_decay,
                               seed=self.seed)

    def decode_config(self) -> DecodeConfig:
        return DecodeConfig(beam=self.decode_beam,
                            max_length=self.decode_max_length,
                            length_penalty=self.decode_length_penalty)
