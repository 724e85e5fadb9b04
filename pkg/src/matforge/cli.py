"""Command-line interface: thin wrappers over the library operations.

Exit codes: 0 success, 1 validation failure, 2 I/O or gateway failure,
64 usage error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .bio import BioError, bio_to_spans, read_conll, spans_to_bio, tokenize, write_conll
from .dataset import (
    BuildConfig,
    DatasetError,
    build_pairs,
    dump_pairs_jsonl,
    load_conll_as_corpus,
    load_spans_jsonl,
)
from .gateway import Gateway, GatewayConfig, GatewayError, default_params
from .kg import KgError, kg_from_dict, parse_kg, score_kg
from .markers import MarkerError, MarkerFormat, parse_marked, render_marked
from .ner_eval import DocMismatch, evaluate_corpus, prompt_count
from .pipeline import RunConfig, RunStore, StoreError, annotate_doc, compare_runs, construct_kg
from .pipeline import run as run_pipeline
from .schema import (
    AnnotatedDoc,
    bundled_schema,
    bundled_schema_names,
    doc_to_dict,
    dump_docs_jsonl,
    load_schema,
    validate_doc,
    validate_schema,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_USAGE = 64


class ValidationFailure(Exception):
    pass


def _load_schema_arg(value: str):
    """Accept a bundled schema name or a path to a schema.json."""
    if Path(value).is_file():
        schema = load_schema(value)
    else:
        name = value[:-5] if value.endswith(".json") else value
        try:
            schema = bundled_schema(name)
        except KeyError:
            raise ValidationFailure(
                f"{value!r} is neither a schema file nor one of {bundled_schema_names()}"
            ) from None
    violations = validate_schema(schema)
    if violations:
        raise ValidationFailure(f"schema {value!r} invalid: " + "; ".join(violations))
    return schema


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write_output(out: str | None, content: str) -> None:
    if out:
        Path(out).write_text(content, encoding="utf-8")
    else:
        click.echo(content, nl=False)


def _gateway_options(fn):
    fn = click.option("--base-url", default=None, help="Endpoint base URL.")(fn)
    fn = click.option("--model", default=None, help="Model name sent to the endpoint.")(fn)
    fn = click.option(
        "--gateway-mode",
        type=click.Choice(["live", "record", "replay"]),
        default="live",
        show_default=True,
    )(fn)
    fn = click.option("--cassette", default=None, help="Cassette path for record/replay.")(fn)
    fn = click.option("--api-style", type=click.Choice(["chat", "completion"]), default="chat")(fn)
    fn = click.option("--timeout", type=float, default=60.0, show_default=True)(fn)
    fn = click.option("--max-retries", type=int, default=3, show_default=True)(fn)
    return fn


def _make_gateway(base_url, model, gateway_mode, cassette, api_style, timeout, max_retries):
    overrides = {
        "mode": gateway_mode,
        "cassette_path": cassette,
        "api_style": api_style,
        "timeout": timeout,
        "max_retries": max_retries,
    }
    if base_url:
        overrides["base_url"] = base_url
    if model:
        overrides["model_name"] = model
    return Gateway(GatewayConfig.from_env(**overrides))


@click.group()
def cli():
    """Marker-based NER and knowledge-graph extraction toolkit."""


@cli.command()
@click.option("--schema", "schema_arg", required=True, help="Bundled schema name or schema.json path.")
@click.option("--text", default=None, help="Annotate one sentence given inline.")
@click.option("--input", "input_path", default=None, help="Raw-text file to annotate.")
@click.option("--out", default=None, help="Output file (default stdout).")
@_gateway_options
def annotate(schema_arg, text, input_path, out, **gateway_kw):
    """Rewrite raw text into entity-recognized text via the model."""
    schema = _load_schema_arg(schema_arg)
    if (text is None) == (input_path is None):
        raise click.UsageError("provide exactly one of --text or --input")
    source = text if text is not None else _read_text(input_path)
    config = RunConfig(mode="hybrid", schema=schema)
    with _make_gateway(**gateway_kw) as gateway:
        marked, doc, stage = annotate_doc(source, schema, config, gateway)
    if doc is None:
        raise ValidationFailure("annotation failed: " + "; ".join(stage.warnings))
    payload = {
        "status": stage.status,
        "attempts": stage.attempts,
        "marked_text": marked,
        "doc": doc_to_dict(doc),
    }
    _write_output(out, json.dumps(payload, indent=2, ensure_ascii=False) + "\n")


@cli.command("extract-kg")
@click.option("--schema", "schema_arg", required=True)
@click.option("--input", "input_path", required=True, help="Raw or entity-recognized text file.")
@click.option("--doc-id", default="", help="doc_id recorded in the graph.")
@click.option("--out", default=None)
@_gateway_options
def extract_kg(schema_arg, input_path, doc_id, out, **gateway_kw):
    """Convert text (raw or entity-recognized) into a knowledge graph."""
    schema = _load_schema_arg(schema_arg)
    source = _read_text(input_path)
    config = RunConfig(mode="direct", schema=schema)
    with _make_gateway(**gateway_kw) as gateway:
        graph, stage = construct_kg(source, schema, config, gateway, doc_id=doc_id)
    if graph is None:
        raise ValidationFailure("graph construction failed: " + "; ".join(stage.warnings))
    from .kg import kg_to_dict

    payload = {"status": stage.status, "attempts": stage.attempts, "kg": kg_to_dict(graph)}
    _write_output(out, json.dumps(payload, indent=2, ensure_ascii=False) + "\n")


@cli.command()
@click.option("--schema", "schema_arg", required=True)
@click.option("--corpus", "corpus_path", required=True, help="Raw corpus as spans JSONL (spans ignored).")
@click.option("--mode", type=click.Choice(["hybrid", "direct"]), default="hybrid", show_default=True)
@click.option("--runs-dir", default="runs", show_default=True)
@click.option("--run-id", default=None, help="Defaults to a fingerprint of the inputs.")
@_gateway_options
def run(schema_arg, corpus_path, mode, runs_dir, run_id, **gateway_kw):
    """Run the full pipeline over a corpus and persist all artifacts."""
    schema = _load_schema_arg(schema_arg)
    corpus = [AnnotatedDoc(d.doc_id, d.text) for d in load_spans_jsonl(_read_text(corpus_path))]
    config = RunConfig(mode=mode, schema=schema)
    store = RunStore(runs_dir)
    with _make_gateway(**gateway_kw) as gateway:
        manifest = run_pipeline(corpus, config, gateway, store, run_id=run_id)
    click.echo(json.dumps(manifest, indent=2, ensure_ascii=False))
    if manifest["totals"]["failed"]:
        sys.exit(EXIT_VALIDATION)


@cli.command("score-ner")
@click.option("--pred", "pred_path", required=True, help="Predicted spans JSONL.")
@click.option("--gold", "gold_path", required=True, help="Gold spans JSONL.")
@click.option("--out", default=None)
def score_ner(pred_path, gold_path, out):
    """Exact-match precision/recall/F1 per entity type plus micro/macro."""
    pred = load_spans_jsonl(_read_text(pred_path))
    gold = load_spans_jsonl(_read_text(gold_path))
    report = evaluate_corpus(pred, gold)
    _write_output(out, report.to_json())


@cli.command("score-kg")
@click.option("--pred", "pred_path", required=True, help="Predicted graph JSON.")
@click.option("--gold", "gold_path", required=True, help="Gold graph JSON.")
@click.option("--out", default=None)
def score_kg_cmd(pred_path, gold_path, out):
    """Node and relation scores for one graph pair."""
    pred = kg_from_dict(json.loads(_read_text(pred_path)))
    gold = kg_from_dict(json.loads(_read_text(gold_path)))
    node_rep, rel_rep, _ = score_kg(pred, gold)
    payload = {"nodes": node_rep.to_dict(), "relations": rel_rep.to_dict()}
    _write_output(out, json.dumps(payload, indent=2, ensure_ascii=False) + "\n")


@cli.command("compare-runs")
@click.option("--runs-dir", default="runs", show_default=True)
@click.option("--run-a", required=True, help="run_id of the first run (e.g. hybrid).")
@click.option("--run-b", required=True, help="run_id of the second run (e.g. direct).")
@click.option("--gold", "gold_path", required=True, help="Gold graphs: JSON array or JSONL.")
@click.option("--out", default=None)
def compare_runs_cmd(runs_dir, run_a, run_b, gold_path, out):
    """Score two persisted runs against gold graphs and report deltas."""
    store = RunStore(runs_dir)
    text = _read_text(gold_path).strip()
    items = json.loads(text) if text.startswith("[") else [json.loads(l) for l in text.splitlines() if l.strip()]
    gold = {g["doc_id"]: kg_from_dict(g) for g in items}
    report = compare_runs(store.read_manifest(run_a), store.read_manifest(run_b), gold, store)
    _write_output(out, json.dumps(report, indent=2, ensure_ascii=False) + "\n")


@cli.command("build-dataset")
@click.option("--schema", "schema_arg", required=True)
@click.option("--corpus", "corpus_path", required=True, help="Spans JSONL or CoNLL file.")
@click.option("--format", "corpus_format", type=click.Choice(["spans-jsonl", "conll"]), default="spans-jsonl", show_default=True)
@click.option("--approach", type=click.Choice(["entity_marker", "special_marker"]), default="entity_marker", show_default=True)
@click.option("--drop-rate", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--template", default=None, help="Template id (defaults per approach).")
@click.option("--out", default=None)
def build_dataset(schema_arg, corpus_path, corpus_format, approach, drop_rate, seed, template, out):
    """Construct fine-tuning prompt/completion pairs as JSONL."""
    schema = _load_schema_arg(schema_arg)
    data = _read_text(corpus_path)
    if corpus_format == "conll":
        corpus = load_conll_as_corpus(data)
    else:
        corpus = load_spans_jsonl(data, schema)
    template = template or (
        "ner_entity_marker" if approach == "entity_marker" else "ner_special_marker"
    )
    config = BuildConfig(approach=approach, drop_rate=drop_rate, seed=seed, template_id=template)
    pairs, report = build_pairs(corpus, schema, config)
    _write_output(out, dump_pairs_jsonl(pairs))
    click.echo(
        f"candidates={report.candidates} dropped={report.dropped} "
        f"skipped={len(report.skipped_docs)} pairs={len(pairs)}",
        err=True,
    )


@cli.command()
@click.option("--from", "from_format", type=click.Choice(["conll", "spans-jsonl", "marked"]), required=True)
@click.option("--to", "to_format", type=click.Choice(["conll", "spans-jsonl", "marked"]), required=True)
@click.option("--schema", "schema_arg", default=None, help="Needed whenever markers are involved.")
@click.option("--input", "input_path", required=True)
@click.option("--out", default=None)
def convert(from_format, to_format, schema_arg, input_path, out):
    """Convert between CoNLL, spans JSONL, and marked text (one doc per line)."""
    data = _read_text(input_path)
    schema = _load_schema_arg(schema_arg) if schema_arg else None
    if from_format in ("marked",) or to_format in ("marked",):
        if schema is None:
            raise click.UsageError("--schema is required when converting marked text")

    if from_format == "conll":
        corpus = load_conll_as_corpus(data)
    elif from_format == "spans-jsonl":
        corpus = load_spans_jsonl(data, schema)
    else:
        corpus = []
        fmt = MarkerFormat.entity()
        for i, line in enumerate(s for s in data.splitlines() if s.strip()):
            outcome = parse_marked(line, schema, fmt, mode="lenient", doc_id=f"doc-{i:04d}")
            corpus.append(outcome.doc)

    if to_format == "spans-jsonl":
        _write_output(out, dump_docs_jsonl(corpus))
    elif to_format == "marked":
        fmt = MarkerFormat.entity()
        lines = [render_marked(doc, fmt, schema) for doc in corpus]
        _write_output(out, "".join(line + "\n" for line in lines))
    else:
        sequences = []
        for doc in corpus:
            tokens = tokenize(doc.text)
            seq, _ = spans_to_bio(tokens, doc.spans, mode="lenient")
            sequences.append(seq)
        _write_output(out, write_conll(sequences))


@cli.command("bench-prompts")
@click.option("--schema", "schema_arg", required=True)
@click.option("--n", "n_units", type=int, required=True, help="Number of input units.")
@click.option(
    "--approach",
    type=click.Choice(["entity_marker", "special_marker", "special", "entity", "both"]),
    default="both",
    show_default=True,
)
def bench_prompts(schema_arg, n_units, approach):
    """Prompt counts per approach and their ratio for a schema."""
    schema = _load_schema_arg(schema_arg)
    alias = {"special": "special_marker", "entity": "entity_marker"}
    approach = alias.get(approach, approach)
    if approach == "both":
        entity = prompt_count(schema, "entity_marker", n_units)
        special = prompt_count(schema, "special_marker", n_units)
        click.echo(
            json.dumps(
                {
                    "schema_id": schema.schema_id,
                    "entity_types": len(schema.entity_types),
                    "n_units": n_units,
                    "entity_marker": entity,
                    "special_marker": special,
                    "ratio": special / entity if entity else None,
                },
                indent=2,
            )
        )
    else:
        click.echo(str(prompt_count(schema, approach, n_units)))


@cli.command()
@click.option("--run-dir", required=True, help="Run directory to review (runs/<run_id>).")
@click.option("--schema", "schema_arg", required=True)
@click.option("--port", type=int, default=8741, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--cors-origin", default="*", show_default=True)
@_gateway_options
def serve(run_dir, schema_arg, port, host, cors_origin, **gateway_kw):
    """Serve the HTTP review API over a run directory."""
    import uvicorn

    from .service.app import create_app

    schema = _load_schema_arg(schema_arg)
    try:
        gateway = _make_gateway(**gateway_kw)
    except GatewayError:
        gateway = None
    app = create_app(run_dir, schema, gateway=gateway, cors_origin=cors_origin)
    uvicorn.run(app, host=host, port=port)


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.exceptions.Exit as e:
        return int(e.exit_code)
    except click.UsageError as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    except (ValidationFailure, DocMismatch, MarkerError, BioError, KgError, DatasetError, ValueError) as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_VALIDATION
    except (GatewayError, StoreError, OSError) as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_IO
    except SystemExit as e:
        return int(e.code or 0)


if __name__ == "__main__":
    sys.exit(main())
