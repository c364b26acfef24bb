import math
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, PrivateAttr, model_validator

from kgrescore.core.errors import InvalidDimension, UnknownId
from kgrescore.transe.schema import NormKind


class EmbeddingModel(BaseModel):
    """Entity and relation translation vectors, rows indexed by catalog id."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    entity_vectors: np.ndarray
    relation_vectors: np.ndarray
    entity_names: tuple[str, ...]
    relation_names: tuple[str, ...]
    norm_kind: NormKind = NormKind.L2

    _entity_index: dict[str, int] = PrivateAttr(default_factory=dict)
    _relation_index: dict[str, int] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def check_shapes(self) -> "EmbeddingModel":
        if self.entity_vectors.ndim != 2 or self.relation_vectors.ndim != 2:
            raise ValueError("Embedding matrices must be two-dimensional")
        if self.entity_vectors.shape[1] != self.relation_vectors.shape[1]:
            raise ValueError("Entity and relation vectors must share one dimension")
        if len(self.entity_names) != self.entity_vectors.shape[0]:
            raise ValueError("One entity name per entity vector is required")
        if len(self.relation_names) != self.relation_vectors.shape[0]:
            raise ValueError("One relation name per relation vector is required")
        if not (
            np.isfinite(self.entity_vectors).all()
            and np.isfinite(self.relation_vectors).all()
        ):
            raise ValueError("Embedding entries must be finite")
        self._entity_index = {name: i for i, name in enumerate(self.entity_names)}
        self._relation_index = {name: i for i, name in enumerate(self.relation_names)}
        return self

    @property
    def dim(self) -> int:
        return int(self.entity_vectors.shape[1])

    @property
    def n_entities(self) -> int:
        return int(self.entity_vectors.shape[0])

    @property
    def n_relations(self) -> int:
        return int(self.relation_vectors.shape[0])

    def entity_id(self, name: str) -> int | None:
        return self._entity_index.get(name)

    def relation_id(self, name: str) -> int | None:
        return self._relation_index.get(name)

    def entity_vector(self, name: str) -> np.ndarray | None:
        index = self._entity_index.get(name)
        return None if index is None else self.entity_vectors[index]

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(
            entity_vectors=self.entity_vectors.copy(),
            relation_vectors=self.relation_vectors.copy(),
            entity_names=self.entity_names,
            relation_names=self.relation_names,
            norm_kind=self.norm_kind,
        )

    def equals(self, other: "EmbeddingModel") -> bool:
        return (
            self.entity_names == other.entity_names
            and self.relation_names == other.relation_names
            and self.norm_kind == other.norm_kind
            and np.array_equal(self.entity_vectors, other.entity_vectors)
            and np.array_equal(self.relation_vectors, other.relation_vectors)
        )


def uniform_bound(k: int) -> float:
    return 6.0 / math.sqrt(k)


def normalize_rows(matrix: np.ndarray) -> None:
    """In-place L2 normalization; all-zero rows stay zero."""
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    np.divide(matrix, norms, out=matrix, where=norms > 0)


def init_model(
    n_entities: int,
    n_relations: int,
    k: int,
    seed: int,
    *,
    norm_kind: NormKind = NormKind.L2,
    entity_names: Sequence[str] | None = None,
    relation_names: Sequence[str] | None = None,
) -> EmbeddingModel:
    if n_entities < 1 or n_relations < 1 or k < 1:
        raise InvalidDimension(
            f"Sizes must be positive (entities={n_entities}, relations={n_relations}, k={k})"
        )

    rng = np.random.default_rng(seed)
    bound = uniform_bound(k)
    entity_vectors = rng.uniform(-bound, bound, size=(n_entities, k))
    relation_vectors = rng.uniform(-bound, bound, size=(n_relations, k))
    normalize_rows(relation_vectors)

    return EmbeddingModel(
        entity_vectors=entity_vectors,
        relation_vectors=relation_vectors,
        entity_names=tuple(entity_names or (str(i) for i in range(n_entities))),
        relation_names=tuple(relation_names or (str(i) for i in range(n_relations))),
        norm_kind=norm_kind,
    )


def dissimilarity(model: EmbeddingModel, head: int, relation: int, tail: int) -> float:
    """d(h + l, t) under the model's norm."""
    for kind, id_, size in (
        ("head", head, model.n_entities),
        ("relation", relation, model.n_relations),
        ("tail", tail, model.n_entities),
    ):
        if not 0 <= id_ < size:
            raise UnknownId(f"{kind} id {id_} is outside [0, {size})", id=id_)

    translation = (
        model.entity_vectors[head]
        + model.relation_vectors[relation]
        - model.entity_vectors[tail]
    )
    return float(np.linalg.norm(translation, ord=model.norm_kind.order))
