from pathlib import Path
from typing import Annotated

import typer

from kgrescore.cli.commands import annotate, embed, evaluate, kg, pipeline, rescore
from kgrescore.core.config import settings
from kgrescore.core.logging import add_file_sinks, set_console_level

app = typer.Typer(
    name=settings.PROJECT_NAME,
    help="Rescore speech-recognizer N-best lists with knowledge-graph relatedness.",
    no_args_is_help=True,
    pretty_exceptions_enable=False,
)


@app.callback()
def main(
    log_level: Annotated[
        str | None, typer.Option(help="Console log level (TRACE, DEBUG, INFO, WARNING, ERROR).")
    ] = None,
    log_dir: Annotated[
        Path | None, typer.Option(help="Also write debug.log and error.log here.")
    ] = None,
) -> None:
    if log_level is not None:
        set_console_level(log_level.upper())
    if log_dir is not None:
        add_file_sinks(log_dir)


app.add_typer(kg.app, name="kg")
app.add_typer(embed.app, name="embed")
app.command("annotate")(annotate.annotate)
app.command("score")(pipeline.score)
app.command("rescore")(rescore.rescore)
app.command("eval")(evaluate.evaluate)
app.command("pipeline")(pipeline.pipeline)
