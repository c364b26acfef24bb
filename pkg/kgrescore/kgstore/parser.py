"""
Line-oriented N-Triples reader and writer on top of rdflib's N-Triples parser.

One statement per line, ``#`` comments and blank lines allowed. Literals keep
their lexical form; datatypes and language tags are carried, never resolved.
"""

import re
from pathlib import Path
from typing import Iterable, TextIO

import rdflib
from pydantic import ValidationError
from rdflib import BNode, Literal
from rdflib.exceptions import ParserError
from rdflib.plugins.parsers.ntriples import W3CNTriplesParser

from kgrescore.core.errors import InputError, MalformedLine
from kgrescore.core.logging import get_logger
from kgrescore.kgstore.models import TripleStore
from kgrescore.kgstore.schema import Term, Triple

logger = get_logger()

# lexical forms are kept verbatim, e.g. "042"^^xsd:integer stays "042"
rdflib.NORMALIZE_LITERALS = False

# a lone backslash match is an escape the grammar does not allow
_ESCAPE = re.compile(r"\\(?:[tbnrf\"'\\]|u[0-9A-Fa-f]{4}|U[0-9A-Fa-f]{8})?")


class _BlankLabels(dict):
    """Blank node context that keeps the document's labels instead of minting fresh ids."""

    def get(self, label, default=None):
        return self.setdefault(label, BNode(label))


class _StatementSink:
    def __init__(self) -> None:
        self.statement: tuple | None = None

    def triple(self, subject, predicate, obj) -> None:
        self.statement = (subject, predicate, obj)


def _term(node) -> Term:
    if isinstance(node, Literal):
        return Term.literal(
            str(node),
            language=node.language,
            datatype=str(node.datatype) if node.datatype is not None else None,
        )
    if isinstance(node, BNode):
        return Term.blank(str(node))
    return Term.iri(str(node))


class NTriplesLineParser:
    """Parses one statement per call; blank labels are shared across calls."""

    def __init__(self) -> None:
        self._sink = _StatementSink()
        self._parser = W3CNTriplesParser(sink=self._sink)
        self._blank_labels = _BlankLabels()

    def parse_line(self, line: str) -> Triple | None:
        """None for blank and comment lines, ValueError when malformed."""
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            return None
        if any(len(m.group(0)) == 1 for m in _ESCAPE.finditer(stripped)):
            raise ValueError("illegal escape sequence")

        self._sink.statement = None
        try:
            self._parser.parsestring(
                line.rstrip("\r\n") + "\n", bnode_context=self._blank_labels
            )
        except ParserError as e:
            raise ValueError(str(e)) from e
        if self._sink.statement is None:
            raise ValueError("not a valid N-Triples statement")

        subject, predicate, obj = self._sink.statement
        try:
            return Triple(subject=_term(subject), predicate=_term(predicate), object=_term(obj))
        except ValidationError as e:
            raise ValueError(e.errors()[0]["msg"]) from e


def parse_ntriples(
    stream: TextIO | Iterable[str],
    *,
    lenient: bool = False,
    include_literals: bool = False,
    source: str | None = None,
) -> TripleStore:
    triples: list[Triple] = []
    skipped: list[int] = []
    parser = NTriplesLineParser()

    for line_number, line in enumerate(stream, start=1):
        try:
            triple = parser.parse_line(line)
        except ValueError as e:
            if not lenient:
                logger.error(f"Malformed N-Triples line {line_number}: {e}")
                raise MalformedLine(line_number, str(e), source=source) from e
            skipped.append(line_number)
            logger.warning(f"Skipping malformed line {line_number}: {e}")
            continue
        if triple is not None:
            triples.append(triple)

    store = TripleStore(triples, include_literals=include_literals, skipped_lines=skipped)
    if skipped:
        logger.warning(f"Skipped {len(skipped)} malformed lines while parsing")
    logger.info(f"Parsed {store!r}")
    return store


def load_ntriples(
    path: Path, *, lenient: bool = False, include_literals: bool = False
) -> TripleStore:
    path = Path(path)
    if not path.is_file():
        raise InputError(
            f"Knowledge graph file not found: {path}",
            action="Please pass an existing N-Triples file.",
            path=str(path),
        )
    with path.open("r", encoding="utf-8") as stream:
        return parse_ntriples(
            stream, lenient=lenient, include_literals=include_literals, source=str(path)
        )


def serialize_ntriples(store: TripleStore | Iterable[Triple], stream: TextIO) -> None:
    triples = store.triples if isinstance(store, TripleStore) else store
    for triple in triples:
        stream.write(triple.n3())
        stream.write("\n")
