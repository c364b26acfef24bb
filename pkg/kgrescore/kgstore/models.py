from typing import Iterable, Iterator

import numpy as np

from kgrescore.core.errors import ConfigError, UnknownEntity
from kgrescore.core.logging import get_logger
from kgrescore.kgstore.schema import MoleculeSet, Triple

logger = get_logger()


class Catalog:
    """Bijection between term names and dense ids, assigned in first-appearance order."""

    def __init__(self, names: Iterable[str] = ()) -> None:
        self._names: list[str] = []
        self._ids: dict[str, int] = {}
        for name in names:
            self.add(name)

    def add(self, name: str) -> int:
        existing = self._ids.get(name)
        if existing is not None:
            return existing
        self._ids[name] = len(self._names)
        self._names.append(name)
        return self._ids[name]

    def id_of(self, name: str) -> int | None:
        return self._ids.get(name)

    def name_of(self, id_: int) -> str:
        return self._names[id_]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._names)

    def __contains__(self, name: object) -> bool:
        return name in self._ids

    def __len__(self) -> int:
        return len(self._names)

    def __iter__(self) -> Iterator[str]:
        return iter(self._names)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Catalog) and self._names == other._names

    def __repr__(self) -> str:
        return f"Catalog(size={len(self._names)})"


class TripleStore:
    """
    Indexed, immutable collection of distinct triples.

    Literal objects are kept in ``triples`` but only enter the entity catalog
    (and the object index) when ``include_literals`` is set.
    """

    def __init__(
        self,
        triples: Iterable[Triple] = (),
        *,
        include_literals: bool = False,
        skipped_lines: Iterable[int] = (),
    ) -> None:
        self.include_literals = include_literals
        self.skipped_lines: tuple[int, ...] = tuple(skipped_lines)
        self.entities = Catalog()
        self.relations = Catalog()
        self._subject_index: dict[int, list[int]] = {}
        self._object_index: dict[int, list[int]] = {}

        seen: set[Triple] = set()
        ordered: list[Triple] = []
        duplicates = 0
        for triple in triples:
            if triple in seen:
                duplicates += 1
                continue
            seen.add(triple)
            position = len(ordered)
            ordered.append(triple)

            subject_id = self.entities.add(triple.subject.key)
            self.relations.add(triple.predicate.key)
            self._subject_index.setdefault(subject_id, []).append(position)
            if self._is_catalogued(triple):
                object_id = self.entities.add(triple.object.key)
                self._object_index.setdefault(object_id, []).append(position)

        self.triples: tuple[Triple, ...] = tuple(ordered)
        if duplicates:
            logger.debug(f"Collapsed {duplicates} duplicate triples")

    @classmethod
    def from_triples(
        cls, triples: Iterable[Triple], include_literals: bool = False
    ) -> "TripleStore":
        return cls(triples, include_literals=include_literals)

    def _is_catalogued(self, triple: Triple) -> bool:
        return self.include_literals or not triple.object.is_literal

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_relations(self) -> int:
        return len(self.relations)

    def __len__(self) -> int:
        return len(self.triples)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, TripleStore)
            and self.triples == other.triples
            and self.entities == other.entities
            and self.relations == other.relations
            and self.include_literals == other.include_literals
        )

    def __repr__(self) -> str:
        return (
            f"TripleStore(triples={len(self.triples)}, entities={self.n_entities}, "
            f"relations={self.n_relations})"
        )

    def entity_id(self, iri: str) -> int | None:
        return self.entities.id_of(iri)

    def subject_positions(self, entity: int) -> tuple[int, ...]:
        return tuple(self._subject_index.get(entity, ()))

    def object_positions(self, entity: int) -> tuple[int, ...]:
        return tuple(self._object_index.get(entity, ()))

    def id_triples(self) -> np.ndarray:
        """(n, 3) array of (head, relation, tail) ids for every embeddable triple."""
        rows = [
            (
                self.entities.id_of(t.subject.key),
                self.relations.id_of(t.predicate.key),
                self.entities.id_of(t.object.key),
            )
            for t in self.triples
            if self._is_catalogued(t)
        ]
        return np.asarray(rows, dtype=np.int64).reshape(-1, 3)

    def molecules_for(
        self, entity: int, limit: int, include_literals: bool | None = None
    ) -> MoleculeSet:
        if not 0 <= entity < self.n_entities:
            raise UnknownEntity(
                f"Entity id {entity} is outside [0, {self.n_entities})",
                entity_id=entity,
            )
        if limit < 1:
            raise ConfigError(f"Molecule limit must be at least 1, got {limit}")
        if include_literals is None:
            include_literals = self.include_literals

        molecules: list[Triple] = []
        seen: set[int] = set()
        truncated = False
        for position in (*self.subject_positions(entity), *self.object_positions(entity)):
            if position in seen:
                continue
            seen.add(position)
            triple = self.triples[position]
            if triple.object.is_literal and not include_literals:
                continue
            if len(molecules) == limit:
                truncated = True
                break
            molecules.append(triple)

        return MoleculeSet(
            entity=self.entities.name_of(entity),
            entity_id=entity,
            molecules=tuple(molecules),
            truncated=truncated,
        )
