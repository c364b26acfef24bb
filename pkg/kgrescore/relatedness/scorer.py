from typing import Sequence

from kgrescore.core.logging import get_logger
from kgrescore.kgstore.schema import MoleculeSet
from kgrescore.relatedness.cost import sentence_cost, viterbi_path_cost
from kgrescore.relatedness.schema import (
    Aggregation,
    MoleculeEmbedding,
    Pairing,
    RelatednessCost,
)
from kgrescore.transe.models import EmbeddingModel
from kgrescore.transe.schema import NormKind

logger = get_logger()


class HypothesisScorer:
    """Relatedness cost of one hypothesis from the molecule sets of its entities."""

    def __init__(
        self,
        model: EmbeddingModel,
        aggregation: Aggregation = Aggregation.SUM,
        pairing: Pairing = Pairing.CROSS,
        norm: NormKind = NormKind.L1,
    ) -> None:
        self.model = model
        self.aggregation = aggregation
        self.pairing = pairing
        self.norm = norm

    def embed(self, molecule_set: MoleculeSet) -> list[MoleculeEmbedding]:
        embedded: list[MoleculeEmbedding] = []
        for triple in molecule_set.molecules:
            subject_vec = self.model.entity_vector(triple.subject.key)
            object_vec = self.model.entity_vector(triple.object.key)
            if subject_vec is None or object_vec is None:
                continue
            embedded.append(
                MoleculeEmbedding(subject_vec=subject_vec, object_vec=object_vec, triple=triple)
            )
        return embedded

    def embeddable_sets(
        self, molecule_sets: Sequence[MoleculeSet]
    ) -> list[list[MoleculeEmbedding]]:
        sets = [self.embed(s) for s in molecule_sets]
        return [s for s in sets if s]

    def score(self, molecule_sets: Sequence[MoleculeSet]) -> RelatednessCost | None:
        """None (unscored) when fewer than two entities have embeddable molecules."""
        return self.score_embedded(self.embeddable_sets(molecule_sets))

    def score_embedded(
        self, sets: Sequence[list[MoleculeEmbedding]]
    ) -> RelatednessCost | None:
        if len(sets) < 2:
            logger.debug(f"Only {len(sets)} embeddable entities; hypothesis left unscored")
            return None

        cost = sentence_cost(sets, self.aggregation, self.pairing, self.norm)
        viterbi_cost, path = viterbi_path_cost(sets, self.norm)
        return cost.model_copy(update={"viterbi_cost": viterbi_cost, "viterbi_path": path})
