from pathlib import Path
from typing import Callable

import httpx
import numpy as np
import pytest

from kgrescore.kgstore.models import TripleStore
from kgrescore.kgstore.schema import Triple

EX = "http://example.org/"

FIXTURES = Path(__file__).parent / "fixtures"
TOY = Path(__file__).resolve().parent.parent / "data" / "toy"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def toy_dir() -> Path:
    return TOY


def two_cluster_graph(
    n_entities: int = 50,
    n_relations: int = 5,
    per_entity: int = 4,
    seed: int = 0,
) -> TripleStore:
    """Random triples that only ever connect entities within the same half of the graph."""
    rng = np.random.default_rng(seed)
    half = n_entities // 2
    triples = []
    for head in range(n_entities):
        low, high = (0, half) if head < half else (half, n_entities)
        for _ in range(per_entity):
            tail = int(rng.integers(low, high))
            while tail == head:
                tail = int(rng.integers(low, high))
            relation = int(rng.integers(n_relations))
            triples.append(Triple.of(f"{EX}e{head}", f"{EX}r{relation}", f"{EX}e{tail}"))
    return TripleStore.from_triples(triples)


def mock_http(handler: Callable[[httpx.Request], httpx.Response]) -> httpx.Client:
    return httpx.Client(transport=httpx.MockTransport(handler))


class RecordingHandler:
    """MockTransport handler serving canned bodies and counting calls."""

    def __init__(self, responses: list[httpx.Response] | Callable[[httpx.Request], httpx.Response]):
        self.responses = responses
        self.requests: list[httpx.Request] = []

    def __call__(self, request: httpx.Request) -> httpx.Response:
        self.requests.append(request)
        if callable(self.responses):
            return self.responses(request)
        return self.responses[min(len(self.requests), len(self.responses)) - 1]


def write_benchmark(
    root: Path, n_utterances: int = 20, n_hypotheses: int = 5, connected_rank: int = 3
) -> dict[str, Path]:
    """
    Per utterance: one hypothesis names two entities joined by a KG triple,
    every other hypothesis names two entities with disjoint neighbourhoods.
    The connected hypothesis is also the reference.
    """
    kg_lines, gazetteer_lines, nbest_lines, reference_lines = [], [], [], []

    def entity(name: str) -> str:
        gazetteer_lines.append(f"{name}\t{EX}{name}")
        return f"<{EX}{name}>"

    for u in range(n_utterances):
        utt = f"utt{u:02d}"
        for rank in range(1, n_hypotheses + 1):
            left, right = f"a{u}x{rank}", f"b{u}x{rank}"
            left_iri, right_iri = entity(left), entity(right)
            if rank == connected_rank:
                kg_lines.append(f"{left_iri} <{EX}linkedTo> {right_iri} .")
            else:
                kg_lines.append(f"{left_iri} <{EX}near> <{EX}hubA{u}x{rank}> .")
                kg_lines.append(f"{right_iri} <{EX}near> <{EX}hubB{u}x{rank}> .")
            text = f"the {left} met the {right} today"
            nbest_lines.append(f"{utt}\t{rank}\t{-float(rank)!r}\t{text}")
            if rank == connected_rank:
                reference_lines.append(f"{utt}\t{text}")

    paths = {
        "kg": root / "bench.nt",
        "gazetteer": root / "bench_gazetteer.tsv",
        "nbest": root / "bench.nbest",
        "references": root / "bench_refs.tsv",
    }
    for key, lines in (
        ("kg", kg_lines),
        ("gazetteer", gazetteer_lines),
        ("nbest", nbest_lines),
        ("references", reference_lines),
    ):
        paths[key].write_text("\n".join(lines) + "\n", encoding="utf-8")
    return paths
