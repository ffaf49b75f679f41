"""Command-line pipeline: annotate, augment, train, summarize, evaluate,
sweep-k, end-to-end pipeline, and the HTTP service.

Commands communicate only through files (JSONL corpora, checkpoint
directories, report files); every command writes a manifest with content
hashes of its inputs and outputs.
"""

from __future__ import annotations

import json
import logging
import statistics
from pathlib import Path

import click

from .augmentation import augment_corpus
from .classifier import (
    load_classifier,
    save_classifier,
    train_classifier,
)
from .config import ConfigError, RunConfig
from .corpus import CorpusError, load_corpus, save_corpus
from .evaluation import EvalConfig, evaluate_run
from .generation import (
    load_generation_output,
    load_generator,
    save_generation_output,
    save_generator,
    summarize,
    train_generator,
)
from .manifest import file_sha256, write_manifest
from .marking import build_generation_training_set, resolve_overlaps
from .oracles import label_corpus
from .qa import AdapterError
from .rouge import rouge_1

logger = logging.getLogger(__name__)


def _load_config(config_path: str | None, **overrides) -> RunConfig:
    try:
        config = (RunConfig.from_json(config_path) if config_path
                  else RunConfig())
        for key, value in overrides.items():
            if value is not None:
                setattr(config, key, value)
        RunConfig.__post_init__(config)  # re-check after overrides
        return config
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"config: {exc}")


def _build_adapters(config: RunConfig):
    try:
        return (config.build_provider(), config.build_qg(), config.build_qa())
    except (ConfigError, AdapterError) as exc:
        raise click.ClickException(f"adapter resolution failed: {exc}")


def _read_corpus(path: str | None, schema: str, what: str) -> list:
    if not path:
        raise click.ClickException(f"missing {what} corpus path")
    try:
        return list(load_corpus(path, schema=schema))
    except (CorpusError, FileNotFoundError) as exc:
        raise click.ClickException(f"{what} corpus: {exc}")


def _load_checkpoints(config: RunConfig):
    if not config.classifier_dir or not Path(config.classifier_dir).exists():
        raise click.ClickException(
            f"classifier stage: checkpoint not found at {config.classifier_dir!r}")
    if not config.generator_dir or not Path(config.generator_dir).exists():
        raise click.ClickException(
            f"generator stage: checkpoint not found at {config.generator_dir!r}")
    return load_classifier(config.classifier_dir), load_generator(config.generator_dir)


def _eval_metadata(config: RunConfig) -> dict:
    metadata = {"span_type": config.span_type, "k": config.effective_k}
    for name, directory in (("classifier", config.classifier_dir),
                            ("generator", config.generator_dir)):
        if directory and Path(directory).exists():
            metadata[f"{name}_checkpoint"] = file_sha256(
                Path(directory) / "config.json")
    return metadata


def _generate_for_corpus(examples, model, checkpoint, config: RunConfig):
    results = []
    for ex in examples:
        ranked = model.predict(ex.document, k=config.effective_k)
        spans = resolve_overlaps((s.span, s.score) for s in ranked)
        results.append(summarize(ex.document, spans, checkpoint,
                                 config.decode_config()))
    return results


common_options = [
    click.option("--config", "config_path", type=click.Path(), default=None,
                 help="JSON file with all settings."),
    click.option("--seed", type=int, default=None),
    click.option("--workers", type=int, default=None),
    click.option("--span-type", "span_type",
                 type=click.Choice(["sentence", "entity", "np", "qa"]),
                 default=None),
    click.option("--k", type=int, default=None),
    click.option("--output-dir", type=click.Path(), default=None),
]


def with_common_options(fn):
    for option in reversed(common_options):
        fn = option(fn)
    return fn


@click.group()
@click.option("-v", "--verbose", is_flag=True)
def main(verbose: bool) -> None:
    """Controllable summarization pipeline."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


@main.command()
@with_common_options
@click.option("--input", "input_path", type=click.Path(), required=True,
              help="Raw corpus JSONL.")
@click.option("--output", "output_path", type=click.Path(), required=True)
def annotate(config_path, seed, workers, span_type, k, output_dir,
             input_path, output_path) -> None:
    """Label oracle spans for each document-summary pair."""
    config = _load_config(config_path, seed=seed, workers=workers,
                          span_type=span_type, k=k, output_dir=output_dir)
    provider, qg, qa = _build_adapters(config)
    examples = _read_corpus(input_path, "raw", "input")
    labeled = list(label_corpus(
        examples, config.span_type, qg=qg, qa=qa, k=config.effective_k,
        provider=provider, workers=config.workers))
    save_corpus(labeled, output_path)
    totals = [len(ex.oracle_spans) for ex in labeled]
    salient = [len(ex.salient_labels()) for ex in labeled]
    rate = sum(salient) / sum(totals) if sum(totals) else 0.0
    click.echo(f"annotated {len(labeled)} example(s) with span_type="
               f"{config.span_type}; salient-span rate {rate:.3f} "
               f"({sum(salient)}/{sum(totals)})")
    write_manifest(config.output_dir, "annotate", config.to_dict(),
                   {"input": input_path}, {"output": output_path})


@main.command()
@with_common_options
@click.option("--input", "input_path", type=click.Path(), required=True,
              help="Annotated corpus JSONL (qa or np span_type).")
@click.option("--output", "output_path", type=click.Path(), required=True)
def augment(config_path, seed, workers, span_type, k, output_dir,
            input_path, output_path) -> None:
    """Drop unsupported summary sentences and emit prefix examples."""
    config = _load_config(config_path, seed=seed, workers=workers,
                          span_type=span_type, k=k, output_dir=output_dir)
    examples = _read_corpus(input_path, "annotated", "input")
    try:
        augmented, stats = augment_corpus(examples)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    save_corpus(augmented, output_path)
    click.echo(f"augmented {stats['input']} example(s) -> {stats['output']} "
               f"(dropped {stats['dropped']})")
    write_manifest(config.output_dir, "augment", config.to_dict(),
                   {"input": input_path}, {"output": output_path},
                   extra={"stats": stats})


@main.command("train-classifier")
@with_common_options
@click.option("--train", "train_path", type=click.Path(), required=True)
@click.option("--validation", "validation_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def train_classifier_cmd(config_path, seed, workers, span_type, k, output_dir,
                         train_path, validation_path, out_dir) -> None:
    """Train the salient span classifier; keeps the best precision@1 epoch."""
    config = _load_config(config_path, seed=seed, workers=workers,
                          span_type=span_type, k=k, output_dir=output_dir)
    train_examples = _read_corpus(train_path, "annotated", "train")
    validation = (_read_corpus(validation_path, "annotated", "validation")
                  if validation_path else None)
    encoder = config.build_encoder()
    try:
        model = train_classifier(train_examples, encoder,
                                 config.classifier_config(), validation,
                                 k=config.effective_k)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    save_classifier(model, out_dir)
    for row in model.history:
        click.echo(f"epoch {row['epoch']}: loss={row['train_loss']:.4f} "
                   f"val p@1={row['val_precision@1']:.3f}")
    click.echo(f"saved best epoch {model.best_epoch} to {out_dir}")
    write_manifest(config.output_dir, "train-classifier", config.to_dict(),
                   {"train": train_path,
                    **({"validation": validation_path} if validation_path else {})},
                   {"checkpoint": out_dir})


@main.command("train-generator")
@with_common_options
@click.option("--train", "train_path", type=click.Path(), required=True,
              help="Annotated corpus; oracle spans are marked for training.")
@click.option("--validation", "validation_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def train_generator_cmd(config_path, seed, workers, span_type, k, output_dir,
                        train_path, validation_path, out_dir) -> None:
    """Train the marked-span conditional generator; keeps the best ROUGE-2 epoch."""
    config = _load_config(config_path, seed=seed, workers=workers,
                          span_type=span_type, k=k, output_dir=output_dir)
    train_examples = _read_corpus(train_path, "annotated", "train")
    pairs = build_generation_training_set(train_examples)
    validation_pairs = None
    if validation_path:
        validation_pairs = build_generation_training_set(
            _read_corpus(validation_path, "annotated", "validation"))
    adapter = config.build_seq2seq()
    try:
        checkpoint = train_generator(pairs, adapter, config.generator_config(),
                                     validation_pairs,
                                     decode_defaults=config.decode_config())
    except Exception as exc:
        raise click.ClickException(f"generator training failed: {exc}")
    save_generator(checkpoint, out_dir)
    for row in checkpoint.history:
        click.echo(f"epoch {row['epoch']}: loss={row['train_loss']:.4f} "
                   f"val R2={row['val_rouge2_f1']:.3f}")
    click.echo(f"saved best epoch {checkpoint.best_epoch} to {out_dir}")
    write_manifest(config.output_dir, "train-generator", config.to_dict(),
                   {"train": train_path,
                    **({"validation": validation_path} if validation_path else {})},
                   {"checkpoint": out_dir})


@main.command("summarize")
@with_common_options
@click.option("--input", "input_path", type=click.Path(), required=True)
@click.option("--output", "output_path", type=click.Path(), required=True)
def summarize_cmd(config_path, seed, workers, span_type, k, output_dir,
                  input_path, output_path) -> None:
    """Predict top-k spans, mark them, and generate summaries."""
    config = _load_config(config_path, seed=seed, workers=workers,
                          span_type=span_type, k=k, output_dir=output_dir)
    model, checkpoint = _load_checkpoints(config)
    examples = _read_corpus(input_path, "raw", "input")
    results = _generate_for_corpus(examples, model, checkpoint, config)
    save_generation_output(results, output_path)
    click.echo(f"wrote {len(results)} summaries to {output_path}")
    write_manifest(config.output_dir, "summarize", config.to_dict(),
                   {"input": input_path, "classifier": config.classifier_dir,
                    "generator": config.generator_dir},
                   {"output": output_path})


@main.command()
@with_common_options
@click.option("--generated", "generated_path", type=click.Path(), required=True)
@click.option("--references", "references_path", type=click.Path(), required=True)
@click.option("--report", "report_path", type=click.Path(), required=True)
def evaluate(config_path, seed, workers, span_type, k, output_dir,
             generated_path, references_path, report_path) -> None:
    """Score a generation run against references (ROUGE + QA metrics)."""
    config = _load_config(config_path, seed=seed, workers=workers,
                          span_type=span_type, k=k, output_dir=output_dir)
    provider, qg, qa = _build_adapters(config)
    results = load_generation_output(generated_path)
    references = _read_corpus(references_path, "annotated", "references")
    try:
        report = evaluate_run(results, references,
                              EvalConfig(metadata=_eval_metadata(config)),
                              qg=qg, qa=qa, provider=provider)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    csv_path = Path(report_path).with_suffix(".csv")
    report.write(report_path, csv_path)
    click.echo(json.dumps(report.corpus, indent=2, sort_keys=True))
    write_manifest(config.output_dir, "evaluate", config.to_dict(),
                   {"generated": generated_path, "references": references_path},
                   {"report": report_path, "csv": csv_path})


@main.command("sweep-k")
@with_common_options
@click.option("--validation", "validation_path", type=click.Path(), required=True)
@click.option("--k-min", type=int, default=1, show_default=True)
@click.option("--k-max", type=int, required=True)
def sweep_k(config_path, seed, workers, span_type, k, output_dir,
            validation_path, k_min, k_max) -> None:
    """Pick the operating k by validation ROUGE-1 F1 (ties -> smaller k)."""
    config = _load_config(config_path, seed=seed, workers=workers,
                          span_type=span_type, k=k, output_dir=output_dir)
    if k_max < k_min or k_min < 1:
        raise click.ClickException(f"empty or invalid k range {k_min}..{k_max}")
    model, checkpoint = _load_checkpoints(config)
    examples = _read_corpus(validation_path, "annotated", "validation")
    best_k, best_score = None, -1.0
    for k_value in range(k_min, k_max + 1):
        config.k = k_value
        results = _generate_for_corpus(examples, model, checkpoint, config)
        scores = [rouge_1(r.summary_tokens, ex.summary.tokens).f1
                  for r, ex in zip(results, examples)]
        mean = statistics.fmean(scores) if scores else 0.0
        click.echo(f"k={k_value}: ROUGE-1 F1 = {mean:.4f}")
        if mean > best_score:
            best_k, best_score = k_value, mean
    click.echo(f"best k = {best_k} (ROUGE-1 F1 {best_score:.4f})")
    write_manifest(config.output_dir, "sweep-k", config.to_dict(),
                   {"validation": validation_path}, {},
                   extra={"best_k": best_k, "best_rouge1_f1": best_score})


@main.command()
@with_common_options
@click.option("--input", "input_path", type=click.Path(), required=True,
              help="Raw corpus for inference; annotated corpus for references.")
@click.option("--references", "references_path", type=click.Path(), default=None,
              help="Annotated references; defaults to --input (annotated).")
def pipeline(config_path, seed, workers, span_type, k, output_dir,
             input_path, references_path) -> None:
    """End-to-end: classify spans, mark, generate, evaluate, manifest."""
    config = _load_config(config_path, seed=seed, workers=workers,
                          span_type=span_type, k=k, output_dir=output_dir)
    provider, qg, qa = _build_adapters(config)
    model, checkpoint = _load_checkpoints(config)
    references = _read_corpus(references_path or input_path, "annotated",
                              "references")
    results = _generate_for_corpus(references, model, checkpoint, config)
    out_dir = Path(config.output_dir)
    generated_path = out_dir / "generated.jsonl"
    save_generation_output(results, generated_path)
    report = evaluate_run(results, references,
                          EvalConfig(metadata=_eval_metadata(config)),
                          qg=qg, qa=qa, provider=provider)
    report_path = out_dir / "report.json"
    report.write(report_path, out_dir / "report.csv")
    click.echo(json.dumps(report.corpus, indent=2, sort_keys=True))
    write_manifest(config.output_dir, "pipeline", config.to_dict(),
                   {"input": input_path, "classifier": config.classifier_dir,
                    "generator": config.generator_dir},
                   {"generated": generated_path, "report": report_path,
                    "csv": out_dir / "report.csv"})


@main.command()
@with_common_options
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(config_path, seed, workers, span_type, k, output_dir,
          host, port) -> None:
    """Run the interactive control service."""
    import uvicorn

    from .service import components_from_config, create_app

    config = _load_config(config_path, seed=seed, workers=workers,
                          span_type=span_type, k=k, output_dir=output_dir)
    try:
        app = create_app(components_from_config(config))
    except (ConfigError, AdapterError) as exc:
        raise click.ClickException(f"service startup failed: {exc}")
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
