import sys
from pathlib import Path
from typing import Annotated

import typer
from rich.table import Table

from kgrescore.cli import options as opt
from kgrescore.cli.schema import DEFAULT_MOLECULE_LIMIT
from kgrescore.cli.services.molecules import MoleculeService
from kgrescore.cli.utils import console, err_console, exit_on_error
from kgrescore.core.errors import ConfigError
from kgrescore.kgstore.parser import load_ntriples, serialize_ntriples
from kgrescore.kgstore.remote import RemoteMoleculeClient

app = typer.Typer(help="Inspect knowledge-graph dumps and molecules.", no_args_is_help=True)


@app.command("parse")
@exit_on_error
def parse(
    kg_path: Annotated[Path, typer.Argument(help="N-Triples file.")],
    lenient: opt.Lenient = None,
    include_literals: opt.IncludeLiterals = None,
    output: Annotated[
        Path | None, typer.Option(help="Write the canonical N-Triples serialization here.")
    ] = None,
) -> None:
    """Parse an N-Triples dump and report its catalogs."""
    store = load_ntriples(kg_path, lenient=bool(lenient), include_literals=bool(include_literals))

    table = Table(title=str(kg_path))
    table.add_column("Triples", justify="right")
    table.add_column("Entities", justify="right")
    table.add_column("Relations", justify="right")
    table.add_column("Skipped lines", justify="right")
    table.add_row(
        str(len(store)),
        str(store.n_entities),
        str(store.n_relations),
        str(len(store.skipped_lines)),
    )
    console.print(table)

    if output is not None:
        with output.open("w", encoding="utf-8") as stream:
            serialize_ntriples(store, stream)
        console.print(f"Wrote {len(store)} triples to {output}")


@app.command("molecules")
@exit_on_error
def molecules(
    iri: Annotated[str, typer.Argument(help="Entity IRI.")],
    kg_path: opt.KgPath = None,
    kg_endpoint: opt.KgEndpoint = None,
    molecule_limit: Annotated[
        int, typer.Option(help="Molecules kept per entity.")
    ] = DEFAULT_MOLECULE_LIMIT,
    include_literals: opt.IncludeLiterals = None,
    cache_dir: opt.CacheDir = None,
    offline: opt.Offline = None,
) -> None:
    """Print the molecules of one entity as N-Triples."""
    if (kg_path is None) == (kg_endpoint is None):
        raise ConfigError("Pass exactly one of --kg-path or --kg-endpoint")

    if kg_path is not None:
        store = load_ntriples(kg_path, include_literals=bool(include_literals))
        service = MoleculeService(store=store, limit=molecule_limit)
    else:
        assert kg_endpoint is not None
        service = MoleculeService(
            remote=RemoteMoleculeClient(kg_endpoint, cache_dir=cache_dir, offline=offline),
            limit=molecule_limit,
        )

    try:
        result = service.molecules_for_iri(iri)
    finally:
        service.close()

    serialize_ntriples(result.molecules, sys.stdout)
    err_console.print(
        f"{len(result)} molecules for {iri}{' (truncated)' if result.truncated else ''}"
    )
