"""
The five rescoring steps behind ``kgrescore pipeline``.

1 load inputs, 2 annotate, 3 molecules, 4 embed and score, 5 rescore and
write. Steps 2 to 5 run per utterance and may fan out to a thread pool;
results are always collected in input order.
"""

import json
import os
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import Callable, Iterable, Iterator, TypeVar

import httpx
from pydantic import BaseModel, ConfigDict

from kgrescore.annotate.gazetteer import load_gazetteer
from kgrescore.annotate.schema import Annotation, Gazetteer
from kgrescore.annotate.spotlight import SpotlightClient
from kgrescore.annotate.utils import annotate_text, filter_annotations
from kgrescore.cli.schema import EmbeddingScope, PipelineConfig
from kgrescore.cli.services.molecules import MoleculeService
from kgrescore.core.errors import InvariantError, KGRescoreError
from kgrescore.core.logging import add_file_sinks, get_logger, remove_file_sinks
from kgrescore.kgstore.models import TripleStore
from kgrescore.kgstore.parser import load_ntriples
from kgrescore.kgstore.remote import RemoteMoleculeClient
from kgrescore.kgstore.schema import MoleculeSet
from kgrescore.nbest.parser import load_nbest, load_references, write_nbest
from kgrescore.nbest.rescore import rescore
from kgrescore.nbest.schema import NBestList, RescoredList, WerSummary
from kgrescore.nbest.wer import summarize_wer
from kgrescore.relatedness.report import CostRow, write_cost_report
from kgrescore.relatedness.schema import RelatednessCost
from kgrescore.relatedness.scorer import HypothesisScorer
from kgrescore.transe.models import EmbeddingModel
from kgrescore.transe.trainer import train
from kgrescore.transe.utils import LOSS_TRACE_COLUMNS, load_model, write_loss_trace

logger = get_logger()

T = TypeVar("T")
R = TypeVar("R")

RESCORED_FILE = "rescored.nbest"
COSTS_FILE = "costs.csv"
LOSS_TRACE_FILE = "loss_trace.csv"
CONFIG_FILE = "config.resolved"
WER_SUMMARY_FILE = "wer_summary.json"
FAILED_FILE = "FAILED.json"

STAGES = {
    1: "load",
    2: "annotate",
    3: "molecules",
    4: "embed",
    5: "rescore",
}


@contextmanager
def pipeline_stage(number: int, label: str | None = None) -> Iterator[None]:
    """Tag any error escaping the block with the stage it happened in."""
    stage = f"{number}:{STAGES[number]}"
    try:
        yield
    except KGRescoreError as e:
        if e.stage is None:
            e.stage = stage
            logger.error(f"Stage {stage} failed{f' for {label}' if label else ''}: {e}")
        raise
    except Exception as e:
        logger.error(f"Stage {stage} failed unexpectedly: {e}")
        raise InvariantError(
            f"Unexpected failure in stage {stage}: {e}",
            stage=stage,
        ) from e


class LinkedUtterance(BaseModel):
    """One N-best list with its kept annotations and molecule sets, per hypothesis."""

    model_config = ConfigDict(frozen=True)

    nbest: NBestList
    annotations: tuple[tuple[Annotation, ...], ...]
    molecule_sets: tuple[tuple[MoleculeSet, ...], ...]


class ScoredUtterance(BaseModel):
    model_config = ConfigDict(frozen=True)

    nbest: NBestList
    costs: tuple[RelatednessCost | None, ...]
    rows: tuple[CostRow, ...]
    trace: tuple[float, ...] = ()


class PipelineResult(BaseModel):
    rescored: list[RescoredList]
    rows: list[CostRow]
    summary: WerSummary | None = None
    artifacts: dict[str, Path] = {}


class PipelineService:
    def __init__(
        self,
        config: PipelineConfig,
        *,
        http_client: httpx.Client | None = None,
    ) -> None:
        self.config = config
        self.http_client = http_client
        self.store: TripleStore | None = None
        self.molecules: MoleculeService | None = None
        self.annotator: Gazetteer | SpotlightClient | None = None
        self.model: EmbeddingModel | None = None
        self.global_trace: list[float] = []

    # -- stage 1 -----------------------------------------------------------

    def open_graph(self) -> MoleculeService:
        config = self.config
        if config.kg_path is not None:
            self.store = load_ntriples(
                config.kg_path, lenient=config.lenient, include_literals=config.include_literals
            )
            self.molecules = MoleculeService(store=self.store, limit=config.molecule_limit)
        elif config.kg_endpoint is not None:
            remote = RemoteMoleculeClient(
                config.kg_endpoint,
                cache_dir=config.cache_dir,
                client=self.http_client,
                offline=config.offline,
            )
            self.molecules = MoleculeService(remote=remote, limit=config.molecule_limit)
        else:
            raise InvariantError("No knowledge graph configured")
        return self.molecules

    def open_annotator(self) -> Gazetteer | SpotlightClient:
        config = self.config
        if config.gazetteer_path is not None:
            self.annotator = load_gazetteer(config.gazetteer_path)
        elif config.annotation_endpoint is not None:
            self.annotator = SpotlightClient(
                config.annotation_endpoint,
                confidence=config.confidence_threshold,
                cache_dir=config.cache_dir,
                client=self.http_client,
                offline=config.offline,
            )
        else:
            raise InvariantError("No annotation source configured")
        return self.annotator

    def load_inputs(self) -> tuple[list[NBestList], dict[str, str]]:
        config = self.config
        with pipeline_stage(1):
            config.require_inputs()
            assert config.nbest_path is not None
            lists = load_nbest(config.nbest_path, n_max=config.n_max)
            references = (
                load_references(config.references_path)
                if config.references_path is not None
                else {}
            )
            self.open_graph()
            self.open_annotator()
            if config.embeddings_path is not None:
                self.model = load_model(config.embeddings_path)
                logger.info(
                    f"Loaded embeddings for {self.model.n_entities} entities from {config.embeddings_path}"
                )
        logger.info(f"Stage 1 done: {len(lists)} utterances, {len(references)} references")
        return lists, references

    # -- stages 2 and 3 ----------------------------------------------------

    def annotate(self, text: str) -> list[Annotation]:
        if self.annotator is None:
            self.open_annotator()
        assert self.annotator is not None
        return filter_annotations(
            annotate_text(text, self.annotator), self.config.confidence_threshold
        )

    def link_utterance(self, nbest: NBestList) -> LinkedUtterance:
        with pipeline_stage(2, nbest.utterance_id):
            annotations = tuple(tuple(self.annotate(h.text)) for h in nbest.hypotheses)

        with pipeline_stage(3, nbest.utterance_id):
            if self.molecules is None:
                self.open_graph()
            assert self.molecules is not None
            molecule_sets = tuple(
                tuple(self.molecules.molecules_for_iri(a.iri) for a in kept)
                for kept in annotations
            )

        linked = sum(1 for kept in annotations if len(kept) >= 2)
        logger.debug(
            f"Utterance '{nbest.utterance_id}': {linked}/{len(nbest)} hypotheses mention 2+ entities"
        )
        return LinkedUtterance(nbest=nbest, annotations=annotations, molecule_sets=molecule_sets)

    # -- stage 4 -----------------------------------------------------------

    def _train_on(self, triples: TripleStore, label: str) -> tuple[EmbeddingModel | None, list[float]]:
        if len(triples) == 0 or triples.n_entities < 2:
            logger.info(f"No trainable graph for {label}; its hypotheses stay unscored")
            return None, []
        logger.debug(
            f"Training embeddings for {label} on {len(triples)} triples, "
            f"{triples.n_entities} entities"
        )
        return train(triples, self.config.train_config)

    def embed_global(self, linked: Iterable[LinkedUtterance]) -> EmbeddingModel | None:
        """One model for every utterance: loaded, trained on the local graph, or on all fetched molecules."""
        with pipeline_stage(4):
            if self.model is not None:
                return self.model
            if self.store is not None:
                graph = self.store
            else:
                graph = TripleStore.from_triples(
                    (
                        triple
                        for item in linked
                        for sets in item.molecule_sets
                        for molecule_set in sets
                        for triple in molecule_set.molecules
                    ),
                    include_literals=self.config.include_literals,
                )
            self.model, self.global_trace = self._train_on(graph, "the whole corpus")
        return self.model

    def score_utterance(
        self, linked: LinkedUtterance, model: EmbeddingModel | None = None
    ) -> ScoredUtterance:
        config = self.config
        nbest = linked.nbest
        with pipeline_stage(4, nbest.utterance_id):
            trace: list[float] = []
            if model is None and config.embedding_scope is EmbeddingScope.UTTERANCE:
                graph = TripleStore.from_triples(
                    (
                        triple
                        for sets in linked.molecule_sets
                        for molecule_set in sets
                        for triple in molecule_set.molecules
                    ),
                    include_literals=config.include_literals,
                )
                model, trace = self._train_on(graph, f"utterance '{nbest.utterance_id}'")

            costs: list[RelatednessCost | None] = []
            rows: list[CostRow] = []
            scorer = (
                HypothesisScorer(model, config.aggregation, config.pairing, config.norm_kind)
                if model is not None
                else None
            )
            for hypothesis, sets in zip(nbest.hypotheses, linked.molecule_sets):
                embedded = scorer.embeddable_sets(sets) if scorer is not None else []
                cost = scorer.score_embedded(embedded) if scorer is not None else None
                costs.append(cost)
                rows.append(
                    CostRow(
                        utt_id=nbest.utterance_id,
                        rank=hypothesis.asr_rank,
                        cost=cost,
                        n_entities=len(embedded),
                        aggregation=config.aggregation,
                        pairing=config.pairing,
                    )
                )

        return ScoredUtterance(nbest=nbest, costs=tuple(costs), rows=tuple(rows), trace=tuple(trace))

    # -- stage 5 -----------------------------------------------------------

    def rescore_utterance(self, scored: ScoredUtterance) -> RescoredList:
        with pipeline_stage(5, scored.nbest.utterance_id):
            return rescore(
                scored.nbest,
                scored.costs,
                cost_field=self.config.cost_field,
                interpolation_weight=self.config.interpolation_weight,
            )

    # -- orchestration -----------------------------------------------------

    def _map(self, fn: Callable[[T], R], items: list[T]) -> list[R]:
        if self.config.jobs == 1 or len(items) < 2:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.config.jobs) as executor:
            return list(executor.map(fn, items))

    def score_all(self, lists: list[NBestList]) -> list[ScoredUtterance]:
        """Stages 2 to 4 for every utterance."""
        linked = self._map(self.link_utterance, lists)
        logger.info(f"Stages 2-3 done: linked {len(linked)} utterances")

        model = None
        if self.config.embedding_scope is EmbeddingScope.GLOBAL:
            model = self.embed_global(linked)
        scored = self._map(lambda item: self.score_utterance(item, model), linked)

        n_scored = sum(1 for s in scored for c in s.costs if c is not None)
        n_total = sum(len(s.costs) for s in scored)
        logger.info(f"Stage 4 done: scored {n_scored}/{n_total} hypotheses")
        return scored

    def write_loss_trace(self, scored: list[ScoredUtterance], path: Path) -> None:
        with path.open("w", encoding="utf-8") as stream:
            if self.config.embedding_scope is EmbeddingScope.GLOBAL:
                stream.write(",".join(LOSS_TRACE_COLUMNS) + "\n")
                write_loss_trace(self.global_trace, stream)
            else:
                stream.write(",".join(("utt_id", *LOSS_TRACE_COLUMNS)) + "\n")
                for item in scored:
                    write_loss_trace(item.trace, stream, utterance_id=item.nbest.utterance_id)

    def run(self) -> PipelineResult:
        config = self.config
        output_dir = Path(config.output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        for stale in (RESCORED_FILE, FAILED_FILE):
            (output_dir / stale).unlink(missing_ok=True)

        log_dir = output_dir / "logs"
        add_file_sinks(log_dir)
        artifacts = {CONFIG_FILE: output_dir / CONFIG_FILE}
        config.write(artifacts[CONFIG_FILE])

        try:
            lists, references = self.load_inputs()
            scored = self.score_all(lists)
            rescored = self._map(self.rescore_utterance, scored)

            with pipeline_stage(5):
                rows = [row for item in scored for row in item.rows]
                artifacts[LOSS_TRACE_FILE] = output_dir / LOSS_TRACE_FILE
                self.write_loss_trace(scored, artifacts[LOSS_TRACE_FILE])

                artifacts[COSTS_FILE] = output_dir / COSTS_FILE
                with artifacts[COSTS_FILE].open("w", encoding="utf-8") as stream:
                    write_cost_report(rows, stream)

                summary = None
                if config.references_path is not None:
                    summary = summarize_wer(
                        lists, {r.utterance_id: r.one_best for r in rescored}, references
                    )
                    artifacts[WER_SUMMARY_FILE] = output_dir / WER_SUMMARY_FILE
                    artifacts[WER_SUMMARY_FILE].write_text(
                        summary.model_dump_json(indent=2) + "\n", encoding="utf-8"
                    )

                # Written last, and atomically, so its presence means success
                artifacts[RESCORED_FILE] = output_dir / RESCORED_FILE
                tmp_path = output_dir / f".{RESCORED_FILE}.tmp"
                with tmp_path.open("w", encoding="utf-8") as stream:
                    write_nbest(rescored, stream)
                os.replace(tmp_path, artifacts[RESCORED_FILE])

            logger.info(f"Pipeline finished; artifacts in {output_dir}")
            return PipelineResult(rescored=rescored, rows=rows, summary=summary, artifacts=artifacts)

        except KGRescoreError as e:
            self.write_failure(output_dir, e)
            raise
        finally:
            self.close()
            remove_file_sinks(log_dir)

    @staticmethod
    def write_failure(output_dir: Path, error: KGRescoreError) -> Path:
        path = Path(output_dir) / FAILED_FILE
        path.write_text(json.dumps(error.detail, indent=2, default=str) + "\n", encoding="utf-8")
        logger.error(f"Pipeline failed in stage {error.stage}; see {path}")
        return path

    def close(self) -> None:
        if self.molecules is not None:
            self.molecules.close()
        if isinstance(self.annotator, SpotlightClient):
            self.annotator.close()
