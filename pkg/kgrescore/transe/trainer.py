from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from kgrescore.core.errors import Degenerate, EmptyGraph
from kgrescore.core.logging import get_logger
from kgrescore.kgstore.models import TripleStore
from kgrescore.transe.models import EmbeddingModel, init_model, normalize_rows
from kgrescore.transe.schema import NormKind, TrainConfig

logger = get_logger()

EpochCallback = Callable[[int, EmbeddingModel, float], None]


def corrupt_batch(
    triples: np.ndarray, n_entities: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """
    Replace the head or the tail (probability 1/2 each) of every row.

    Replacements are drawn uniformly over all entities and redrawn while they
    equal the entity they replace. Returns the corrupted rows and the mask of
    rows whose head was replaced.
    """
    if n_entities < 2:
        raise Degenerate(f"Corruption needs at least 2 entities, got {n_entities}")

    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    replace_head = rng.random(len(triples)) < 0.5
    slot = np.where(replace_head, 0, 2)
    rows = np.arange(len(triples))
    original = triples[rows, slot]

    candidates = rng.integers(n_entities, size=len(triples))
    clash = candidates == original
    while clash.any():
        candidates[clash] = rng.integers(n_entities, size=int(clash.sum()))
        clash = candidates == original

    corrupted = triples.copy()
    corrupted[rows, slot] = candidates
    return corrupted, replace_head


def corrupt_triple(
    triple: tuple[int, int, int], n_entities: int, rng: np.random.Generator
) -> tuple[int, int, int]:
    corrupted, _ = corrupt_batch(np.asarray([triple]), n_entities, rng)
    head, relation, tail = (int(v) for v in corrupted[0])
    return head, relation, tail


def _directions(translations: np.ndarray, norm_kind: NormKind) -> np.ndarray:
    """Subgradient of the norm w.r.t. its argument, zero where the argument is zero."""
    if norm_kind is NormKind.L1:
        return np.sign(translations)
    lengths = np.linalg.norm(translations, axis=1, keepdims=True)
    return np.divide(
        translations, lengths, out=np.zeros_like(translations), where=lengths > 0
    )


def batch_loss_and_gradients(
    entity_vectors: np.ndarray,
    relation_vectors: np.ndarray,
    positives: np.ndarray,
    negatives: np.ndarray,
    margin: float,
    norm_kind: NormKind,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pair hinge losses and the summed subgradient for both matrices."""
    h, r, t = positives[:, 0], positives[:, 1], positives[:, 2]
    hn, rn, tn = negatives[:, 0], negatives[:, 1], negatives[:, 2]

    positive_translation = entity_vectors[h] + relation_vectors[r] - entity_vectors[t]
    negative_translation = entity_vectors[hn] + relation_vectors[rn] - entity_vectors[tn]
    positive_d = np.linalg.norm(positive_translation, ord=norm_kind.order, axis=1)
    negative_d = np.linalg.norm(negative_translation, ord=norm_kind.order, axis=1)

    losses = np.maximum(0.0, margin + (positive_d - negative_d))
    active = (losses > 0)[:, None]
    positive_u = _directions(positive_translation, norm_kind) * active
    negative_u = _directions(negative_translation, norm_kind) * active

    entity_grad = np.zeros_like(entity_vectors)
    relation_grad = np.zeros_like(relation_vectors)
    np.add.at(entity_grad, h, positive_u)
    np.add.at(entity_grad, t, -positive_u)
    np.add.at(relation_grad, r, positive_u)
    np.add.at(entity_grad, hn, -negative_u)
    np.add.at(entity_grad, tn, negative_u)
    np.add.at(relation_grad, rn, -negative_u)
    return losses, entity_grad, relation_grad


def margin_loss_and_gradient(
    model: EmbeddingModel,
    positive: tuple[int, int, int],
    negative: tuple[int, int, int],
    margin: float,
) -> tuple[float, dict[int, np.ndarray], dict[int, np.ndarray]]:
    """[margin + d(positive) - d(negative)]+ and its subgradient, keyed by row id."""
    losses, entity_grad, relation_grad = batch_loss_and_gradients(
        model.entity_vectors,
        model.relation_vectors,
        np.asarray([positive], dtype=np.int64),
        np.asarray([negative], dtype=np.int64),
        margin,
        model.norm_kind,
    )
    entity_ids = {positive[0], positive[2], negative[0], negative[2]}
    relation_ids = {positive[1], negative[1]}
    return (
        float(losses[0]),
        {i: entity_grad[i] for i in sorted(entity_ids)},
        {i: relation_grad[i] for i in sorted(relation_ids)},
    )


def _apply_batch(
    model: EmbeddingModel,
    positives: np.ndarray,
    negatives: np.ndarray,
    config: TrainConfig,
) -> float:
    losses, entity_grad, relation_grad = batch_loss_and_gradients(
        model.entity_vectors,
        model.relation_vectors,
        positives,
        negatives,
        config.margin,
        config.norm_kind,
    )
    model.entity_vectors -= config.learning_rate * entity_grad
    model.relation_vectors -= config.learning_rate * relation_grad
    return float(losses.sum())


def train_triples(
    triples: np.ndarray,
    entity_names: tuple[str, ...],
    relation_names: tuple[str, ...],
    config: TrainConfig,
    on_epoch_end: EpochCallback | None = None,
) -> tuple[EmbeddingModel, list[float]]:
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    if len(triples) == 0:
        raise EmptyGraph("Cannot train embeddings on a graph without triples")

    model = init_model(
        len(entity_names),
        len(relation_names),
        config.dim,
        config.seed,
        norm_kind=config.norm_kind,
        entity_names=entity_names,
        relation_names=relation_names,
    )
    rng = np.random.default_rng([config.seed, 1])
    trace: list[float] = []

    executor = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    try:
        for epoch in range(1, config.epochs + 1):
            normalize_rows(model.entity_vectors)
            order = rng.permutation(len(triples))
            batches = [
                triples[order[start : start + config.batch_size]]
                for start in range(0, len(triples), config.batch_size)
            ]
            negatives = [corrupt_batch(batch, model.n_entities, rng)[0] for batch in batches]

            if executor is None:
                total = sum(
                    _apply_batch(model, positives, corrupted, config)
                    for positives, corrupted in zip(batches, negatives)
                )
            else:
                total = sum(
                    executor.map(
                        lambda pair: _apply_batch(model, pair[0], pair[1], config),
                        zip(batches, negatives),
                    )
                )

            normalize_rows(model.entity_vectors)
            mean_loss = total / len(triples)
            trace.append(mean_loss)
            logger.debug(f"Epoch {epoch}/{config.epochs}: mean loss {mean_loss:.6f}")
            if on_epoch_end is not None:
                on_epoch_end(epoch, model, mean_loss)
    finally:
        if executor is not None:
            executor.shutdown()

    if trace:
        logger.info(
            f"Trained {config.epochs} epochs on {len(triples)} triples: "
            f"loss {trace[0]:.4f} -> {trace[-1]:.4f}"
        )
    return model, trace


def train(
    store: TripleStore,
    config: TrainConfig,
    on_epoch_end: EpochCallback | None = None,
) -> tuple[EmbeddingModel, list[float]]:
    triples = store.id_triples()
    if len(triples) == 0:
        raise EmptyGraph("Cannot train embeddings on a graph without triples")
    return train_triples(
        triples,
        store.entities.names,
        store.relations.names,
        config,
        on_epoch_end=on_epoch_end,
    )
