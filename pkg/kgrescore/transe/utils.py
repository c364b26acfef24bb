import csv
from pathlib import Path
from typing import Sequence, TextIO

import numpy as np

from kgrescore.core.errors import InputError, MalformedLine
from kgrescore.core.logging import get_logger
from kgrescore.transe.models import EmbeddingModel
from kgrescore.transe.schema import NormKind

logger = get_logger()

HEADER_TAG = "transe"
LOSS_TRACE_COLUMNS = ("epoch", "mean_loss")


def write_model(model: EmbeddingModel, stream: TextIO) -> None:
    stream.write(
        f"{HEADER_TAG} {model.dim} {model.n_entities} {model.n_relations} {model.norm_kind.value}\n"
    )
    for tag, names, vectors in (
        ("E", model.entity_names, model.entity_vectors),
        ("R", model.relation_names, model.relation_vectors),
    ):
        for name, vector in zip(names, vectors):
            values = "\t".join(repr(float(v)) for v in vector)
            stream.write(f"{tag}\t{name}\t{values}\n")


def save_model(model: EmbeddingModel, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as stream:
        write_model(model, stream)
    logger.info(f"Saved {model.n_entities}x{model.dim} embedding model to {path}")


def read_model(stream: TextIO, source: str | None = None) -> EmbeddingModel:
    header = stream.readline().split()
    if len(header) != 5 or header[0] != HEADER_TAG:
        raise MalformedLine(1, "expected 'transe <k> <n_entities> <n_relations> <norm>'", source=source)
    try:
        k, n_entities, n_relations = (int(v) for v in header[1:4])
        norm_kind = NormKind(header[4])
    except ValueError as e:
        raise MalformedLine(1, str(e), source=source) from e

    rows: dict[str, tuple[list[str], list[list[float]]]] = {"E": ([], []), "R": ([], [])}
    for line_number, line in enumerate(stream, start=2):
        line = line.rstrip("\n")
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != k + 2 or fields[0] not in rows:
            raise MalformedLine(line_number, f"expected tag, name and {k} values", source=source)
        try:
            vector = [float(v) for v in fields[2:]]
        except ValueError as e:
            raise MalformedLine(line_number, str(e), source=source) from e
        names, vectors = rows[fields[0]]
        names.append(fields[1])
        vectors.append(vector)

    entity_names, entity_vectors = rows["E"]
    relation_names, relation_vectors = rows["R"]
    if len(entity_names) != n_entities or len(relation_names) != n_relations:
        raise MalformedLine(
            1,
            f"header announces {n_entities} entities / {n_relations} relations, "
            f"found {len(entity_names)} / {len(relation_names)}",
            source=source,
        )
    return EmbeddingModel(
        entity_vectors=np.asarray(entity_vectors, dtype=float).reshape(n_entities, k),
        relation_vectors=np.asarray(relation_vectors, dtype=float).reshape(n_relations, k),
        entity_names=tuple(entity_names),
        relation_names=tuple(relation_names),
        norm_kind=norm_kind,
    )


def load_model(path: Path) -> EmbeddingModel:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"Embedding file not found: {path}", path=str(path))
    with path.open("r", encoding="utf-8") as stream:
        return read_model(stream, source=str(path))


def write_loss_trace(
    trace: Sequence[float], stream: TextIO, utterance_id: str | None = None
) -> None:
    """``epoch,mean_loss`` rows; an ``utt_id`` column is prepended when given."""
    writer = csv.writer(stream, lineterminator="\n")
    for epoch, loss in enumerate(trace, start=1):
        row = [epoch, repr(float(loss))]
        writer.writerow([utterance_id, *row] if utterance_id is not None else row)
