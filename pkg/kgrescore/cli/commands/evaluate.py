from pathlib import Path
from typing import Annotated

import typer
from rich.table import Table

from kgrescore.cli.utils import console, exit_on_error
from kgrescore.nbest.parser import DEFAULT_N_MAX, load_nbest, load_references
from kgrescore.nbest.wer import summarize_wer


@exit_on_error
def evaluate(
    nbest_path: Annotated[Path, typer.Argument(help="Original N-best hypotheses file.")],
    references_path: Annotated[Path, typer.Argument(help="Reference transcripts.")],
    rescored_path: Annotated[
        Path | None, typer.Option("--rescored", help="Rescored N-best from `rescore`.")
    ] = None,
    n_max: Annotated[int, typer.Option(help="Hypotheses kept per utterance.")] = DEFAULT_N_MAX,
    output: Annotated[Path | None, typer.Option(help="Also write the summary as JSON.")] = None,
) -> None:
    """Corpus WER of the original 1-best, the rescored 1-best and the N-best oracle."""
    originals = load_nbest(nbest_path, n_max=n_max)
    references = load_references(references_path)
    rescored_one_best = (
        {nbest.utterance_id: nbest.hypotheses[0] for nbest in load_nbest(rescored_path, n_max=n_max)}
        if rescored_path is not None
        else {}
    )

    summary = summarize_wer(originals, rescored_one_best, references)
    if output is not None:
        output.write_text(summary.model_dump_json(indent=2) + "\n", encoding="utf-8")

    table = Table(title=f"WER over {summary.n_utterances} utterances ({summary.reference_words} words)")
    table.add_column("Selection")
    table.add_column("WER", justify="right")
    table.add_row("original 1-best", f"{summary.original_1best:.4f}")
    table.add_row("rescored 1-best", f"{summary.rescored_1best:.4f}")
    table.add_row("oracle", f"{summary.oracle:.4f}")
    console.print(table)
