import io
import itertools

import numpy as np
import pytest

from kgrescore.core.errors import DimensionMismatch, EmptyMoleculeSet, MalformedLine, TooFewEntities
from kgrescore.kgstore.models import TripleStore
from kgrescore.kgstore.schema import Triple
from kgrescore.nbest.rescore import rescore
from kgrescore.nbest.schema import Hypothesis, NBestList
from kgrescore.relatedness.cost import (
    adjacency_cost,
    molecule_distance,
    pairwise_distances,
    sentence_cost,
    viterbi_path_cost,
)
from kgrescore.relatedness.report import (
    COST_REPORT_COLUMNS,
    CostRow,
    read_cost_report,
    write_cost_report,
)
from kgrescore.relatedness.schema import Aggregation, MoleculeEmbedding, Pairing, RelatednessCost
from kgrescore.relatedness.scorer import HypothesisScorer
from kgrescore.transe.schema import NormKind, TrainConfig
from kgrescore.transe.trainer import train

EX = "http://example.org/"


def _molecule(subject, obj) -> MoleculeEmbedding:
    return MoleculeEmbedding(
        subject_vec=np.asarray(subject, dtype=float), object_vec=np.asarray(obj, dtype=float)
    )


def _random_set(rng: np.random.Generator, size: int, dim: int = 3) -> list[MoleculeEmbedding]:
    return [_molecule(rng.normal(size=dim), rng.normal(size=dim)) for _ in range(size)]


def _distance(a: np.ndarray, b: np.ndarray, norm: NormKind) -> float:
    return float(np.linalg.norm(a - b, ord=norm.order))


def test_molecule_distance_keeps_positions_apart():
    a = _molecule([0.0, 0.0], [1.0, 1.0])
    b = _molecule([1.0, 0.0], [1.0, 1.0])
    assert molecule_distance(a, b) == (1.0, 0.0)
    assert molecule_distance(a, b, NormKind.L2) == (1.0, 0.0)


def test_identical_sets_cost_nothing():
    rng = np.random.default_rng(0)
    molecules = _random_set(rng, 4)
    assert adjacency_cost(molecules, molecules) == (0.0, 0.0)


def test_shared_triple_gives_zero_total_cost():
    shared = _molecule([0.1, 0.2], [0.3, 0.4])
    left = [_molecule([5.0, 5.0], [6.0, 6.0]), shared]
    right = [shared, _molecule([-3.0, 1.0], [2.0, -2.0])]
    cost = sentence_cost([left, right])
    assert cost.total_cost == 0.0
    assert cost.subject_cost == 0.0 and cost.object_cost == 0.0


def test_shared_subject_zeroes_only_the_subject_delta():
    left = [_molecule([1.0, 1.0], [0.0, 0.0])]
    right = [_molecule([1.0, 1.0], [0.0, 3.0])]
    cost = sentence_cost([left, right])
    assert cost.subject_cost == 0.0
    assert cost.object_cost == 3.0


def test_cross_adjacency_matches_all_pairs_enumeration():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        norm = NormKind.L1 if rng.random() < 0.5 else NormKind.L2
        a = _random_set(rng, int(rng.integers(1, 7)))
        b = _random_set(rng, int(rng.integers(1, 7)))
        subject_d, object_d = adjacency_cost(a, b, Pairing.CROSS, norm)
        assert subject_d == pytest.approx(
            min(_distance(x.subject_vec, y.subject_vec, norm) for x in a for y in b), abs=1e-12
        )
        assert object_d == pytest.approx(
            min(_distance(x.object_vec, y.object_vec, norm) for x in a for y in b), abs=1e-12
        )


def test_aligned_pairing_uses_the_shorter_set():
    a = [_molecule([0.0], [0.0]), _molecule([10.0], [10.0]), _molecule([4.0], [2.0])]
    b = [_molecule([4.0], [2.0]), _molecule([7.0], [9.0])]
    assert adjacency_cost(a, b, Pairing.ALIGNED) == (3.0, 1.0)
    # the third molecule of `a` would have been closer but has no partner
    assert adjacency_cost(a, b, Pairing.CROSS) == (0.0, 0.0)


def test_viterbi_matches_exhaustive_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        norm = NormKind.L1 if rng.random() < 0.5 else NormKind.L2
        sets = [_random_set(rng, int(rng.integers(1, 7))) for _ in range(int(rng.integers(1, 5)))]

        best = None
        for choice in itertools.product(*(range(len(s)) for s in sets)):
            total = sum(
                _distance(sets[t][choice[t]].subject_vec, sets[t + 1][choice[t + 1]].subject_vec, norm)
                + _distance(sets[t][choice[t]].object_vec, sets[t + 1][choice[t + 1]].object_vec, norm)
                for t in range(len(sets) - 1)
            )
            if best is None or total < best:
                best = total

        cost, path = viterbi_path_cost(sets, norm)
        assert cost == pytest.approx(best, abs=1e-9)
        assert len(path) == len(sets)
        assert all(0 <= index < len(s) for index, s in zip(path, sets))


def test_viterbi_breaks_ties_toward_the_lowest_index():
    same = _molecule([0.0], [0.0])
    cost, path = viterbi_path_cost([[same, same], [same, same, same]])
    assert cost == 0.0
    assert path == (0, 0)


def test_sum_and_min_aggregation():
    sets = [[_molecule([0.0], [0.0])], [_molecule([1.0], [2.0])], [_molecule([4.0], [2.5])]]
    summed = sentence_cost(sets, Aggregation.SUM)
    assert summed.subject_deltas == (1.0, 3.0)
    assert summed.object_deltas == (2.0, 0.5)
    assert summed.subject_cost == 4.0 and summed.object_cost == 2.5
    assert summed.total_cost == 6.5

    minimum = sentence_cost(sets, Aggregation.MIN)
    assert minimum.subject_cost == 1.0 and minimum.object_cost == 0.5
    assert minimum.total_cost == 1.5


def test_cost_validation_errors():
    with pytest.raises(TooFewEntities):
        sentence_cost([[_molecule([0.0], [0.0])]])
    with pytest.raises(EmptyMoleculeSet):
        adjacency_cost([], [_molecule([0.0], [0.0])])
    with pytest.raises(DimensionMismatch):
        adjacency_cost([_molecule([0.0], [0.0])], [_molecule([0.0, 1.0], [0.0, 1.0])])
    with pytest.raises(DimensionMismatch):
        pairwise_distances(np.zeros((2, 3)), np.zeros((2, 4)), NormKind.L1)


def test_total_cost_must_decompose():
    with pytest.raises(ValueError):
        RelatednessCost(subject_cost=1.0, object_cost=1.0, total_cost=3.0)


def test_pairwise_distances_span_several_chunks():
    rng = np.random.default_rng(5)
    a, b = rng.normal(size=(150, 4)), rng.normal(size=(3, 4))
    expected = np.array([[np.abs(x - y).sum() for y in b] for x in a])
    assert np.allclose(pairwise_distances(a, b, NormKind.L1), expected)


def test_viterbi_prefers_the_lexicographically_smallest_optimum():
    x, y = _molecule([0.0], [0.0]), _molecule([5.0], [0.0])
    assert viterbi_path_cost([[x, y], [y, x]]) == (0.0, (0, 1))


def test_viterbi_ties_match_the_smallest_enumerated_path():
    rng = np.random.default_rng(13)

    def grid_set() -> list[MoleculeEmbedding]:
        return [
            _molecule(rng.integers(0, 3, size=2).astype(float), rng.integers(0, 3, size=2).astype(float))
            for _ in range(int(rng.integers(1, 4)))
        ]

    for _ in range(300):
        sets = [grid_set() for _ in range(int(rng.integers(2, 5)))]

        def total(choice: tuple[int, ...]) -> float:
            return sum(
                sum(molecule_distance(sets[t][choice[t]], sets[t + 1][choice[t + 1]]))
                for t in range(len(sets) - 1)
            )

        expected = min(
            itertools.product(*(range(len(s)) for s in sets)), key=lambda c: (total(c), c)
        )
        cost, path = viterbi_path_cost(sets)
        assert path == expected
        assert cost == total(expected)


def test_cross_adjacency_is_symmetric():
    rng = np.random.default_rng(19)
    for _ in range(500):
        norm = NormKind.L1 if rng.random() < 0.5 else NormKind.L2
        a = _random_set(rng, int(rng.integers(1, 7)))
        b = _random_set(rng, int(rng.integers(1, 7)))
        forward = adjacency_cost(a, b, Pairing.CROSS, norm)
        backward = adjacency_cost(b, a, Pairing.CROSS, norm)
        assert forward == pytest.approx(backward, abs=1e-12)


def test_independent_minima_never_exceed_the_consistent_path():
    rng = np.random.default_rng(23)
    for _ in range(500):
        norm = NormKind.L1 if rng.random() < 0.5 else NormKind.L2
        sets = [_random_set(rng, int(rng.integers(1, 6))) for _ in range(int(rng.integers(2, 6)))]
        independent = sentence_cost(sets, Aggregation.SUM, Pairing.CROSS, norm).total_cost
        consistent, _ = viterbi_path_cost(sets, norm)
        assert independent <= consistent + 1e-9


def _scaled(molecules: list[MoleculeEmbedding], c: float) -> list[MoleculeEmbedding]:
    return [_molecule(m.subject_vec * c, m.object_vec * c) for m in molecules]


def test_scaling_embeddings_scales_costs_and_keeps_orderings():
    rng = np.random.default_rng(29)
    for _ in range(100):
        norm = NormKind.L1 if rng.random() < 0.5 else NormKind.L2
        hypotheses = [
            [_random_set(rng, int(rng.integers(1, 5))) for _ in range(int(rng.integers(2, 4)))]
            for _ in range(int(rng.integers(2, 6)))
        ]
        nbest = NBestList(
            utterance_id="u",
            hypotheses=tuple(
                Hypothesis(utterance_id="u", asr_rank=rank, asr_score=0.0, words=(f"h{rank}",))
                for rank in range(1, len(hypotheses) + 1)
            ),
        )
        base = [sentence_cost(sets, norm=norm) for sets in hypotheses]
        base_paths = [viterbi_path_cost(sets, norm)[1] for sets in hypotheses]

        for c in (0.5, 2.0, 8.0):
            scaled_sets = [[_scaled(s, c) for s in sets] for sets in hypotheses]
            scaled = [sentence_cost(sets, norm=norm) for sets in scaled_sets]
            for before, after in zip(base, scaled):
                assert after.total_cost == pytest.approx(c * before.total_cost)
                assert after.subject_cost == pytest.approx(c * before.subject_cost)
            assert [viterbi_path_cost(sets, norm)[1] for sets in scaled_sets] == base_paths
            assert [h.asr_rank for h in rescore(nbest, scaled).hypotheses] == [
                h.asr_rank for h in rescore(nbest, base).hypotheses
            ]


# -- scoring hypotheses ------------------------------------------------------


def _scorer() -> tuple[HypothesisScorer, TripleStore]:
    store = TripleStore.from_triples(
        [
            Triple.of(f"{EX}Bear", f"{EX}type", f"{EX}Animal"),
            Triple.of(f"{EX}Honey", f"{EX}eatenBy", f"{EX}Bear"),
            Triple.of(f"{EX}Pear", f"{EX}type", f"{EX}Fruit"),
            Triple.of(f"{EX}Pear", f"{EX}growsIn", f"{EX}Orchard"),
        ]
    )
    model, _ = train(store, TrainConfig(dim=8, epochs=5, batch_size=2, seed=0))
    return HypothesisScorer(model), store


def _set(store: TripleStore, name: str):
    return store.molecules_for(store.entity_id(f"{EX}{name}"), 500)


def test_connected_entities_score_zero_and_unrelated_ones_do_not():
    scorer, store = _scorer()
    connected = scorer.score([_set(store, "Bear"), _set(store, "Honey")])
    unrelated = scorer.score([_set(store, "Pear"), _set(store, "Honey")])

    assert connected.total_cost == 0.0
    assert unrelated.total_cost > 0.0
    assert connected.viterbi_cost == 0.0
    assert connected.n_entities == 2
    assert connected.field("viterbi") == 0.0


def test_fewer_than_two_embeddable_entities_is_unscored():
    scorer, store = _scorer()
    assert scorer.score([_set(store, "Bear")]) is None
    assert scorer.score([]) is None

    foreign = TripleStore.from_triples([Triple.of(f"{EX}Mars", f"{EX}orbits", f"{EX}Sun")])
    mars = foreign.molecules_for(0, 500)
    assert scorer.embed(mars) == []
    assert scorer.score([_set(store, "Bear"), mars]) is None


def test_cost_report_round_trips_through_csv():
    cost = sentence_cost([[_molecule([0.0], [0.0])], [_molecule([0.1], [0.7])]])
    cost = cost.model_copy(update={"viterbi_cost": 0.8})
    rows = [
        CostRow(utt_id="u1", rank=1, cost=cost, n_entities=2, aggregation=Aggregation.SUM, pairing=Pairing.CROSS),
        CostRow(utt_id="u1", rank=2, cost=None, n_entities=1, aggregation=Aggregation.SUM, pairing=Pairing.CROSS),
    ]
    buffer = io.StringIO()
    write_cost_report(rows, buffer)
    lines = buffer.getvalue().splitlines()
    assert lines[0] == ",".join(COST_REPORT_COLUMNS)
    assert lines[2] == "u1,2,,,,,1,sum,cross"

    read_back = read_cost_report(io.StringIO(buffer.getvalue()))
    assert read_back[0].cost.total_cost == cost.total_cost
    assert read_back[0].cost.viterbi_cost == 0.8
    assert read_back[1].cost is None


def test_cost_report_needs_its_header():
    with pytest.raises(MalformedLine):
        read_cost_report(io.StringIO("a,b\n1,2\n"))
