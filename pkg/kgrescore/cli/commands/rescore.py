import sys
from pathlib import Path
from typing import Annotated

import typer

from kgrescore.cli import options as opt
from kgrescore.cli.utils import err_console, exit_on_error
from kgrescore.core.errors import InputError, MisalignedCosts
from kgrescore.nbest.parser import DEFAULT_N_MAX, load_nbest, write_nbest
from kgrescore.nbest.rescore import rescore as rescore_list
from kgrescore.nbest.schema import CostField
from kgrescore.relatedness.report import CostRow, read_cost_report
from kgrescore.relatedness.schema import RelatednessCost


def align_costs(
    utterance_id: str, n_hypotheses: int, rows: dict[tuple[str, int], CostRow]
) -> list[RelatednessCost | None]:
    costs = []
    for rank in range(1, n_hypotheses + 1):
        row = rows.get((utterance_id, rank))
        if row is None:
            raise MisalignedCosts(
                f"No cost row for utterance '{utterance_id}' rank {rank}",
                utterance_id=utterance_id,
                rank=rank,
            )
        costs.append(row.cost)
    return costs


@exit_on_error
def rescore(
    nbest_path: Annotated[Path, typer.Argument(help="N-best hypotheses file.")],
    costs_path: Annotated[Path, typer.Argument(help="Cost report from `score`.")],
    cost_field: opt.CostFieldOpt = None,
    interpolation_weight: opt.InterpolationWeight = None,
    n_max: Annotated[int, typer.Option(help="Hypotheses kept per utterance.")] = DEFAULT_N_MAX,
    output: Annotated[Path | None, typer.Option(help="Rescored N-best; stdout when omitted.")] = None,
) -> None:
    """Reorder each N-best list by its relatedness cost (lower first)."""
    lists = load_nbest(nbest_path, n_max=n_max)
    if not costs_path.is_file():
        raise InputError(f"Cost report not found: {costs_path}", path=str(costs_path))
    with costs_path.open("r", encoding="utf-8") as stream:
        rows = {(row.utt_id, row.rank): row for row in read_cost_report(stream, source=str(costs_path))}

    rescored = [
        rescore_list(
            nbest,
            align_costs(nbest.utterance_id, len(nbest), rows),
            cost_field=cost_field or CostField.TOTAL,
            interpolation_weight=interpolation_weight,
        )
        for nbest in lists
    ]

    if output is None:
        write_nbest(rescored, sys.stdout)
    else:
        with output.open("w", encoding="utf-8") as stream:
            write_nbest(rescored, stream)

    changed = sum(1 for r in rescored if r.one_best.asr_rank != 1)
    err_console.print(f"Rescored {len(rescored)} utterances; 1-best changed in {changed}")
