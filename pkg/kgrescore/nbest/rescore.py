from typing import Sequence

from kgrescore.core.errors import ConfigError, MisalignedCosts
from kgrescore.nbest.schema import CostField, NBestList, RescoredEntry, RescoredList
from kgrescore.relatedness.schema import RelatednessCost


def rescore(
    nbest: NBestList,
    costs: Sequence[RelatednessCost | None],
    cost_field: CostField | str = CostField.TOTAL,
    interpolation_weight: float | None = None,
) -> RescoredList:
    """
    Stable ascending sort on the selected cost. Unscored hypotheses (None)
    sink below every scored one and keep their ASR order.

    With ``interpolation_weight`` α the key becomes
    α·(cost / max cost in the list) + (1 − α)·(−asr_score).
    """
    cost_field = CostField(cost_field)
    if len(costs) != len(nbest.hypotheses):
        raise MisalignedCosts(
            f"Utterance '{nbest.utterance_id}' has {len(nbest.hypotheses)} hypotheses "
            f"but {len(costs)} costs",
            utterance_id=nbest.utterance_id,
        )
    if interpolation_weight is not None and not 0.0 <= interpolation_weight <= 1.0:
        raise ConfigError(f"Interpolation weight must lie in [0, 1], got {interpolation_weight}")

    scored = [(h, c, c.field(cost_field.value)) for h, c in zip(nbest.hypotheses, costs) if c is not None]
    unscored = [h for h, c in zip(nbest.hypotheses, costs) if c is None]

    if interpolation_weight is not None and scored:
        alpha = interpolation_weight
        largest = max(value for _, _, value in scored)
        scored = [
            (h, c, alpha * (value / largest if largest > 0 else 0.0) + (1 - alpha) * -h.asr_score)
            for h, c, value in scored
        ]

    scored.sort(key=lambda item: item[2])
    entries = [
        RescoredEntry(hypothesis=h, cost=c, new_rank=rank, sort_key=key)
        for rank, (h, c, key) in enumerate(scored, start=1)
    ]
    entries += [
        RescoredEntry(hypothesis=h, cost=None, new_rank=rank)
        for rank, h in enumerate(unscored, start=len(scored) + 1)
    ]
    return RescoredList(
        utterance_id=nbest.utterance_id, entries=tuple(entries), cost_field=cost_field
    )
