from pathlib import Path
from typing import Annotated

import typer
from pydantic import ValidationError
from rich.table import Table

from kgrescore.cli import options as opt
from kgrescore.cli.utils import console, exit_on_error
from kgrescore.core.errors import ConfigError
from kgrescore.kgstore.parser import load_ntriples
from kgrescore.transe.evaluate import evaluate_link_prediction, model_id_triples, random_mean_rank
from kgrescore.transe.schema import NormKind, TrainConfig
from kgrescore.transe.trainer import train
from kgrescore.transe.utils import LOSS_TRACE_COLUMNS, load_model, save_model, write_loss_trace

app = typer.Typer(help="Train and evaluate TransE embeddings.", no_args_is_help=True)


@app.command("train")
@exit_on_error
def train_embeddings(
    kg_path: Annotated[Path, typer.Argument(help="N-Triples training graph.")],
    output: Annotated[Path, typer.Option("--output", "-o", help="Embedding file to write.")],
    dim: Annotated[int, typer.Option(help="Embedding dimension.")] = 50,
    margin: Annotated[float, typer.Option(help="Hinge margin.")] = 1.0,
    learning_rate: Annotated[float, typer.Option(help="SGD learning rate.")] = 0.01,
    epochs: Annotated[int, typer.Option(help="Training epochs.")] = 100,
    batch_size: Annotated[int, typer.Option(help="Minibatch size.")] = 128,
    seed: Annotated[int, typer.Option(help="Random seed.")] = 0,
    embedding_norm: Annotated[
        NormKind, typer.Option("--embedding-norm", help="Dissimilarity norm.")
    ] = NormKind.L2,
    workers: Annotated[
        int, typer.Option(help="Threads updating minibatches concurrently (>1 is not reproducible).")
    ] = 1,
    loss_trace: Annotated[
        Path | None, typer.Option(help="Write the per-epoch mean loss as CSV.")
    ] = None,
    include_literals: opt.IncludeLiterals = None,
    lenient: opt.Lenient = None,
) -> None:
    """Train one embedding model over a whole graph."""
    store = load_ntriples(kg_path, lenient=bool(lenient), include_literals=bool(include_literals))
    try:
        config = TrainConfig(
            dim=dim,
            margin=margin,
            learning_rate=learning_rate,
            epochs=epochs,
            batch_size=batch_size,
            seed=seed,
            norm_kind=embedding_norm,
            workers=workers,
        )
    except ValidationError as e:
        raise ConfigError(f"Invalid training parameters: {e.errors()[0]['msg']}") from e
    model, trace = train(store, config)
    save_model(model, output)

    if loss_trace is not None:
        with loss_trace.open("w", encoding="utf-8") as stream:
            stream.write(",".join(LOSS_TRACE_COLUMNS) + "\n")
            write_loss_trace(trace, stream)

    final = f"{trace[-1]:.6f}" if trace else "n/a"
    console.print(
        f"Trained {model.n_entities} entities, {model.n_relations} relations "
        f"for {len(trace)} epochs (final loss {final}) -> {output}"
    )


@app.command("evaluate")
@exit_on_error
def evaluate(
    kg_path: Annotated[Path, typer.Argument(help="Graph of known triples (filtering).")],
    embeddings: Annotated[Path, typer.Argument(help="Embedding file from `embed train`.")],
    test_path: Annotated[
        Path | None, typer.Option("--test", help="Triples to rank; defaults to the whole graph.")
    ] = None,
    hits_at: Annotated[list[int] | None, typer.Option("--hits-at", help="Cut-offs for hits@k.")] = None,
) -> None:
    """Filtered tail-prediction ranks of an embedding model."""
    model = load_model(embeddings)
    known_store = load_ntriples(kg_path)
    test_store = load_ntriples(test_path) if test_path is not None else known_store

    known = model_id_triples(model, known_store.triples)
    targets = model_id_triples(model, test_store.triples)
    report = evaluate_link_prediction(
        model,
        targets,
        known=[tuple(row) for row in known.tolist()],
        hits_at=hits_at or (1, 3, 10),
    )

    table = Table(title=f"Tail prediction ({report.count} triples)")
    table.add_column("Metric")
    table.add_column("Value", justify="right")
    table.add_row("mean rank", f"{report.mean_rank:.2f}")
    table.add_row("random mean rank", f"{random_mean_rank(model.n_entities):.2f}")
    table.add_row("MRR", f"{report.mean_reciprocal_rank:.4f}")
    for k, value in sorted(report.hits_at.items()):
        table.add_row(f"hits@{k}", f"{value:.4f}")
    console.print(table)
