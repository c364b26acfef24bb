from pathlib import Path

from rich.table import Table

from kgrescore.cli import options as opt
from kgrescore.cli.schema import resolve_config
from kgrescore.cli.services.pipeline import (
    COSTS_FILE,
    CONFIG_FILE,
    LOSS_TRACE_FILE,
    PipelineService,
)
from kgrescore.cli.utils import console, exit_on_error
from kgrescore.core.logging import add_file_sinks, remove_file_sinks
from kgrescore.relatedness.report import write_cost_report


@exit_on_error
def pipeline(
    config: opt.ConfigFile = None,
    kg_path: opt.KgPath = None,
    kg_endpoint: opt.KgEndpoint = None,
    gazetteer_path: opt.GazetteerPath = None,
    annotation_endpoint: opt.AnnotationEndpoint = None,
    nbest_path: opt.NbestPath = None,
    references_path: opt.ReferencesPath = None,
    lenient: opt.Lenient = None,
    include_literals: opt.IncludeLiterals = None,
    n_max: opt.NMax = None,
    confidence_threshold: opt.ConfidenceThreshold = None,
    molecule_limit: opt.MoleculeLimit = None,
    embedding_scope: opt.EmbeddingScopeOpt = None,
    embeddings_path: opt.EmbeddingsPath = None,
    dim: opt.Dim = None,
    margin: opt.Margin = None,
    learning_rate: opt.LearningRate = None,
    epochs: opt.Epochs = None,
    batch_size: opt.BatchSize = None,
    seed: opt.Seed = None,
    embedding_norm: opt.EmbeddingNorm = None,
    norm_kind: opt.NormKindOpt = None,
    aggregation: opt.AggregationOpt = None,
    pairing: opt.PairingOpt = None,
    cost_field: opt.CostFieldOpt = None,
    interpolation_weight: opt.InterpolationWeight = None,
    output_dir: opt.OutputDir = None,
    jobs: opt.Jobs = None,
    cache_dir: opt.CacheDir = None,
    offline: opt.Offline = None,
) -> None:
    """Run all five steps: load, annotate, fetch molecules, embed and score, rescore."""
    overrides = {k: v for k, v in locals().items() if k != "config"}
    resolved = resolve_config(config, overrides)
    result = PipelineService(resolved).run()

    table = Table(title="Rescoring run")
    table.add_column("Artifact")
    table.add_column("Path")
    for name, path in result.artifacts.items():
        table.add_row(name, str(path))
    console.print(table)

    if result.summary is not None:
        summary = result.summary
        console.print(
            f"WER original {summary.original_1best:.4f}  "
            f"rescored {summary.rescored_1best:.4f}  "
            f"oracle {summary.oracle:.4f}  "
            f"({summary.n_utterances} utterances)"
        )


@exit_on_error
def score(
    config: opt.ConfigFile = None,
    kg_path: opt.KgPath = None,
    kg_endpoint: opt.KgEndpoint = None,
    gazetteer_path: opt.GazetteerPath = None,
    annotation_endpoint: opt.AnnotationEndpoint = None,
    nbest_path: opt.NbestPath = None,
    lenient: opt.Lenient = None,
    include_literals: opt.IncludeLiterals = None,
    n_max: opt.NMax = None,
    confidence_threshold: opt.ConfidenceThreshold = None,
    molecule_limit: opt.MoleculeLimit = None,
    embedding_scope: opt.EmbeddingScopeOpt = None,
    embeddings_path: opt.EmbeddingsPath = None,
    dim: opt.Dim = None,
    margin: opt.Margin = None,
    learning_rate: opt.LearningRate = None,
    epochs: opt.Epochs = None,
    batch_size: opt.BatchSize = None,
    seed: opt.Seed = None,
    embedding_norm: opt.EmbeddingNorm = None,
    norm_kind: opt.NormKindOpt = None,
    aggregation: opt.AggregationOpt = None,
    pairing: opt.PairingOpt = None,
    output_dir: opt.OutputDir = None,
    jobs: opt.Jobs = None,
    cache_dir: opt.CacheDir = None,
    offline: opt.Offline = None,
) -> None:
    """Steps 1 to 4 only: write the cost report and loss trace without rescoring."""
    overrides = {k: v for k, v in locals().items() if k != "config"}
    resolved = resolve_config(config, overrides)

    output = Path(resolved.output_dir)
    output.mkdir(parents=True, exist_ok=True)
    add_file_sinks(output / "logs")
    service = PipelineService(resolved)
    try:
        resolved.write(output / CONFIG_FILE)
        lists, _ = service.load_inputs()
        scored = service.score_all(lists)

        service.write_loss_trace(scored, output / LOSS_TRACE_FILE)
        rows = [row for item in scored for row in item.rows]
        with (output / COSTS_FILE).open("w", encoding="utf-8") as stream:
            write_cost_report(rows, stream)
    finally:
        service.close()
        remove_file_sinks(output / "logs")

    scored_count = sum(1 for row in rows if row.cost is not None)
    console.print(f"Scored {scored_count}/{len(rows)} hypotheses -> {output / COSTS_FILE}")
