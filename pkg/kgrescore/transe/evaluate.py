from typing import Iterable, Sequence

import numpy as np

from kgrescore.core.logging import get_logger
from kgrescore.kgstore.schema import Triple
from kgrescore.transe.models import EmbeddingModel
from kgrescore.transe.schema import LinkPredictionReport

logger = get_logger()


def random_mean_rank(n_entities: int) -> float:
    """Expected rank of the true tail under a uniformly random scorer."""
    return (n_entities + 1) / 2


def tail_ranks(
    model: EmbeddingModel,
    triples: np.ndarray,
    known: Iterable[tuple[int, int, int]] | None = None,
) -> np.ndarray:
    """
    Filtered rank of every true tail: 1 + the number of candidate tails with a
    strictly smaller dissimilarity, ignoring candidates that complete another
    known triple for the same (head, relation).
    """
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    known_tails: dict[tuple[int, int], set[int]] = {}
    for h, r, t in known if known is not None else triples:
        known_tails.setdefault((int(h), int(r)), set()).add(int(t))

    ranks = np.empty(len(triples), dtype=np.int64)
    for i, (h, r, t) in enumerate(triples):
        translated = model.entity_vectors[h] + model.relation_vectors[r]
        scores = np.linalg.norm(
            translated - model.entity_vectors, ord=model.norm_kind.order, axis=1
        )
        better = scores < scores[t]
        for other in known_tails.get((int(h), int(r)), ()):
            if other != t:
                better[other] = False
        ranks[i] = 1 + int(better.sum())
    return ranks


def evaluate_link_prediction(
    model: EmbeddingModel,
    triples: np.ndarray,
    known: Iterable[tuple[int, int, int]] | None = None,
    hits_at: Sequence[int] = (1, 3, 10),
) -> LinkPredictionReport:
    ranks = tail_ranks(model, triples, known)
    if len(ranks) == 0:
        return LinkPredictionReport(
            count=0,
            mean_rank=0.0,
            mean_reciprocal_rank=0.0,
            hits_at={k: 0.0 for k in hits_at},
        )

    report = LinkPredictionReport(
        count=len(ranks),
        mean_rank=float(ranks.mean()),
        mean_reciprocal_rank=float((1.0 / ranks).mean()),
        hits_at={k: float((ranks <= k).mean()) for k in hits_at},
    )
    logger.info(
        f"Link prediction over {report.count} triples: mean rank {report.mean_rank:.2f} "
        f"(random {random_mean_rank(model.n_entities):.2f}), MRR {report.mean_reciprocal_rank:.3f}"
    )
    return report


def model_id_triples(model: EmbeddingModel, triples: Iterable[Triple]) -> np.ndarray:
    """Re-index triples by the model's own catalogs; triples with unseen terms are dropped."""
    rows = []
    for triple in triples:
        h = model.entity_id(triple.subject.key)
        r = model.relation_id(triple.predicate.key)
        t = model.entity_id(triple.object.key)
        if h is not None and r is not None and t is not None:
            rows.append((h, r, t))
    return np.asarray(rows, dtype=np.int64).reshape(-1, 3)
