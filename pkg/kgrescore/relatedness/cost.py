"""
Semantic relatedness cost between the molecule sets of adjacent entities.

Subject-position and object-position distances are never mixed: every
adjacency yields one subject delta and one object delta.
"""

from typing import Sequence

import numpy as np

from kgrescore.core.errors import DimensionMismatch, EmptyMoleculeSet, TooFewEntities
from kgrescore.relatedness.schema import (
    Aggregation,
    MoleculeEmbedding,
    Pairing,
    RelatednessCost,
)
from kgrescore.transe.schema import NormKind

MoleculeSetEmbedding = Sequence[MoleculeEmbedding]

_CHUNK_ROWS = 64


def _stack(molecules: MoleculeSetEmbedding) -> tuple[np.ndarray, np.ndarray]:
    if not molecules:
        raise EmptyMoleculeSet("Molecule set is empty")
    dims = {m.dim for m in molecules}
    if len(dims) != 1:
        raise DimensionMismatch(f"Molecules of one set have dimensions {sorted(dims)}")
    subjects = np.stack([m.subject_vec for m in molecules])
    objects = np.stack([m.object_vec for m in molecules])
    return subjects, objects


def _check_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatch(f"Dimension {a.shape[-1]} does not match {b.shape[-1]}")


def pairwise_distances(a: np.ndarray, b: np.ndarray, norm: NormKind) -> np.ndarray:
    """(len(a), len(b)) matrix of row distances, built in row chunks."""
    _check_dims(a, b)
    out = np.empty((len(a), len(b)))
    for start in range(0, len(a), _CHUNK_ROWS):
        diff = a[start : start + _CHUNK_ROWS, None, :] - b[None, :, :]
        out[start : start + _CHUNK_ROWS] = np.linalg.norm(diff, ord=norm.order, axis=2)
    return out


def molecule_distance(
    a: MoleculeEmbedding, b: MoleculeEmbedding, norm: NormKind = NormKind.L1
) -> tuple[float, float]:
    _check_dims(a.subject_vec, b.subject_vec)
    subject_d = np.linalg.norm(a.subject_vec - b.subject_vec, ord=norm.order)
    object_d = np.linalg.norm(a.object_vec - b.object_vec, ord=norm.order)
    return float(subject_d), float(object_d)


def _adjacency(
    a: tuple[np.ndarray, np.ndarray],
    b: tuple[np.ndarray, np.ndarray],
    pairing: Pairing,
    norm: NormKind,
) -> tuple[float, float]:
    (subjects_a, objects_a), (subjects_b, objects_b) = a, b
    _check_dims(subjects_a, subjects_b)
    if pairing is Pairing.CROSS:
        return (
            float(pairwise_distances(subjects_a, subjects_b, norm).min()),
            float(pairwise_distances(objects_a, objects_b, norm).min()),
        )

    # n-th molecule against n-th molecule, over the shorter set
    n = min(len(subjects_a), len(subjects_b))
    subject_d = np.linalg.norm(subjects_a[:n] - subjects_b[:n], ord=norm.order, axis=1)
    object_d = np.linalg.norm(objects_a[:n] - objects_b[:n], ord=norm.order, axis=1)
    return float(subject_d.min()), float(object_d.min())


def adjacency_cost(
    set_a: MoleculeSetEmbedding,
    set_b: MoleculeSetEmbedding,
    pairing: Pairing = Pairing.CROSS,
    norm: NormKind = NormKind.L1,
) -> tuple[float, float]:
    return _adjacency(_stack(set_a), _stack(set_b), pairing, norm)


def sentence_cost(
    sets: Sequence[MoleculeSetEmbedding],
    aggregation: Aggregation = Aggregation.SUM,
    pairing: Pairing = Pairing.CROSS,
    norm: NormKind = NormKind.L1,
) -> RelatednessCost:
    if len(sets) < 2:
        raise TooFewEntities(f"Relatedness needs at least 2 entities, got {len(sets)}")

    stacks = [_stack(s) for s in sets]
    deltas = [_adjacency(stacks[t], stacks[t + 1], pairing, norm) for t in range(len(stacks) - 1)]
    subject_deltas = tuple(d[0] for d in deltas)
    object_deltas = tuple(d[1] for d in deltas)

    reduce = sum if aggregation is Aggregation.SUM else min
    subject_cost = float(reduce(subject_deltas))
    object_cost = float(reduce(object_deltas))
    return RelatednessCost(
        subject_cost=subject_cost,
        object_cost=object_cost,
        total_cost=subject_cost + object_cost,
        subject_deltas=subject_deltas,
        object_deltas=object_deltas,
        aggregation=aggregation,
        pairing=pairing,
        n_entities=len(sets),
    )


def viterbi_path_cost(
    sets: Sequence[MoleculeSetEmbedding], norm: NormKind = NormKind.L1
) -> tuple[float, tuple[int, ...]]:
    """
    Cheapest consistent choice of one molecule per entity, where consecutive
    choices cost subject distance plus object distance. Among equally cheap
    paths the lexicographically smallest index tuple wins.
    """
    if not sets:
        raise EmptyMoleculeSet("No molecule sets to align")
    stacks = [_stack(s) for s in sets]
    transitions = [
        pairwise_distances(subjects_a, subjects_b, norm) + pairwise_distances(objects_a, objects_b, norm)
        for (subjects_a, objects_a), (subjects_b, objects_b) in zip(stacks, stacks[1:])
    ]

    # cheapest completion from each molecule of entity t to the last entity
    to_go = [np.zeros(len(stacks[-1][0]))]
    for transition in reversed(transitions):
        to_go.append((transition + to_go[-1][None, :]).min(axis=1))
    to_go.reverse()

    path = [int(to_go[0].argmin())]
    for t, transition in enumerate(transitions):
        path.append(int((transition[path[-1]] + to_go[t + 1]).argmin()))
    return float(to_go[0][path[0]]), tuple(path)
