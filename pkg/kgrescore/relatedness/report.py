import csv
from typing import Iterable, TextIO

from pydantic import BaseModel, ValidationError

from kgrescore.core.errors import MalformedLine
from kgrescore.relatedness.schema import Aggregation, Pairing, RelatednessCost

COST_REPORT_COLUMNS = (
    "utt_id",
    "rank",
    "subject_cost",
    "object_cost",
    "total_cost",
    "viterbi_cost",
    "n_entities",
    "aggregation",
    "pairing",
)


class CostRow(BaseModel):
    utt_id: str
    rank: int
    cost: RelatednessCost | None
    n_entities: int
    aggregation: Aggregation
    pairing: Pairing


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_cost_report(rows: Iterable[CostRow], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(COST_REPORT_COLUMNS)
    for row in rows:
        cost = row.cost
        writer.writerow(
            [
                row.utt_id,
                row.rank,
                _fmt(cost.subject_cost if cost else None),
                _fmt(cost.object_cost if cost else None),
                _fmt(cost.total_cost if cost else None),
                _fmt(cost.viterbi_cost if cost else None),
                row.n_entities,
                row.aggregation.value,
                row.pairing.value,
            ]
        )


def read_cost_report(stream: TextIO, source: str | None = None) -> list[CostRow]:
    reader = csv.DictReader(stream)
    if tuple(reader.fieldnames or ()) != COST_REPORT_COLUMNS:
        raise MalformedLine(1, f"expected header {','.join(COST_REPORT_COLUMNS)}", source=source)

    rows: list[CostRow] = []
    for line_number, record in enumerate(reader, start=2):
        try:
            cost = None
            if record["total_cost"]:
                cost = RelatednessCost(
                    subject_cost=float(record["subject_cost"]),
                    object_cost=float(record["object_cost"]),
                    total_cost=float(record["total_cost"]),
                    viterbi_cost=float(record["viterbi_cost"]) if record["viterbi_cost"] else None,
                    n_entities=int(record["n_entities"]),
                    aggregation=Aggregation(record["aggregation"]),
                    pairing=Pairing(record["pairing"]),
                )
            rows.append(
                CostRow(
                    utt_id=record["utt_id"],
                    rank=int(record["rank"]),
                    cost=cost,
                    n_entities=int(record["n_entities"]),
                    aggregation=Aggregation(record["aggregation"]),
                    pairing=Pairing(record["pairing"]),
                )
            )
        except (ValueError, ValidationError) as e:
            raise MalformedLine(line_number, str(e), source=source) from e
    return rows
