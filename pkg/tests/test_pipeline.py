import csv
import json
from pathlib import Path
from urllib.parse import parse_qs

import httpx
import pytest

from conftest import EX, RecordingHandler, mock_http, write_benchmark
from kgrescore.annotate.gazetteer import load_gazetteer, match_gazetteer
from kgrescore.cli.schema import (
    DEFAULT_CONFIDENCE_THRESHOLD,
    DEFAULT_MOLECULE_LIMIT,
    EmbeddingScope,
    PipelineConfig,
    read_config_file,
    resolve_config,
)
from kgrescore.cli.services.molecules import MoleculeService
from kgrescore.cli.services.pipeline import (
    CONFIG_FILE,
    COSTS_FILE,
    FAILED_FILE,
    LOSS_TRACE_FILE,
    RESCORED_FILE,
    WER_SUMMARY_FILE,
    PipelineService,
    pipeline_stage,
)
from kgrescore.core.errors import ConfigError, InputError, InvariantError, NetworkError
from kgrescore.kgstore.parser import load_ntriples
from kgrescore.nbest.parser import DEFAULT_N_MAX, load_nbest
from kgrescore.transe.schema import TrainConfig
from kgrescore.transe.trainer import train
from kgrescore.transe.utils import save_model

FAST = {"dim": 8, "epochs": 10, "batch_size": 4, "seed": 3}


def _toy_config(toy_dir: Path, output_dir: Path, **overrides) -> PipelineConfig:
    """The toy run with absolute paths; an override of None unsets a key."""
    values = {
        **read_config_file(toy_dir / "pipeline.conf"),
        "kg_path": toy_dir / "kg.nt",
        "gazetteer_path": toy_dir / "gazetteer.tsv",
        "nbest_path": toy_dir / "nbest.tsv",
        "references_path": toy_dir / "references.tsv",
        "output_dir": output_dir,
        **overrides,
    }
    return PipelineConfig(**{k: v for k, v in values.items() if v is not None})


def _one_best_texts(path: Path) -> dict[str, str]:
    """Utterance id to the text of its rescored 1-best."""
    return {nbest.utterance_id: nbest.hypotheses[0].text for nbest in load_nbest(path)}


def test_toy_run_promotes_the_connected_hypotheses(toy_dir, tmp_path):
    config = _toy_config(toy_dir, tmp_path / "run")
    result = PipelineService(config).run()

    for name in (RESCORED_FILE, COSTS_FILE, LOSS_TRACE_FILE, CONFIG_FILE, WER_SUMMARY_FILE):
        assert (tmp_path / "run" / name).is_file(), name
    assert not (tmp_path / "run" / FAILED_FILE).exists()

    assert _one_best_texts(tmp_path / "run" / RESCORED_FILE) == {
        "u1": "the eiffel tower stands in paris",
        "u2": "the spree flows through berlin",
        "u3": "the bear ate the honey",
    }
    assert result.summary is not None
    assert result.summary.rescored_1best == 0.0
    assert result.summary.rescored_1best < result.summary.original_1best

    summary = json.loads((tmp_path / "run" / WER_SUMMARY_FILE).read_text(encoding="utf-8"))
    assert summary["n_utterances"] == 3


def test_toy_run_leaves_unlinked_hypotheses_unscored(toy_dir, tmp_path):
    PipelineService(_toy_config(toy_dir, tmp_path)).run()
    with (tmp_path / COSTS_FILE).open(encoding="utf-8") as stream:
        rows = {(r["utt_id"], r["rank"]): r for r in csv.DictReader(stream)}

    # "pairs" links below the threshold, "bern" is not in the gazetteer
    assert rows[("u1", "1")]["total_cost"] == ""
    assert rows[("u2", "3")]["total_cost"] == ""
    assert float(rows[("u1", "2")]["total_cost"]) == 0.0
    assert float(rows[("u1", "3")]["total_cost"]) > 0.0


def test_utterance_without_any_links_keeps_its_asr_order(toy_dir, tmp_path):
    nbest = tmp_path / "unlinked.tsv"
    nbest.write_text(
        "u1\t1\t-1.0\tnothing to see here\n"
        "u1\t2\t-2.0\tnothing to sea here\n"
        "u1\t3\t-3.0\tnothing two see here\n",
        encoding="utf-8",
    )
    config = _toy_config(toy_dir, tmp_path / "run", nbest_path=nbest, references_path=None)
    PipelineService(config).run()

    rescored = load_nbest(tmp_path / "run" / RESCORED_FILE)
    assert [h.text for h in rescored[0].hypotheses] == [
        "nothing to see here",
        "nothing to sea here",
        "nothing two see here",
    ]


def test_loss_trace_has_one_row_per_epoch_and_utterance(toy_dir, tmp_path):
    PipelineService(_toy_config(toy_dir, tmp_path, epochs=4)).run()
    lines = (tmp_path / LOSS_TRACE_FILE).read_text(encoding="utf-8").splitlines()
    assert lines[0] == "utt_id,epoch,mean_loss"
    assert len(lines) == 1 + 3 * 4
    assert [line.split(",")[0] for line in lines[1:5]] == ["u1"] * 4


def test_missing_graph_fails_in_the_load_stage(toy_dir, tmp_path):
    config = _toy_config(toy_dir, tmp_path, kg_path=tmp_path / "missing.nt")
    with pytest.raises(InputError) as excinfo:
        PipelineService(config).run()

    assert excinfo.value.stage == "1:load"
    failed = json.loads((tmp_path / FAILED_FILE).read_text(encoding="utf-8"))
    assert failed["stage"] == "1:load"
    assert failed["status"] == "error"
    assert not (tmp_path / RESCORED_FILE).exists()


def test_failed_run_removes_a_stale_rescored_file(toy_dir, tmp_path):
    PipelineService(_toy_config(toy_dir, tmp_path)).run()
    assert (tmp_path / RESCORED_FILE).is_file()

    bad_nbest = tmp_path / "bad.tsv"
    bad_nbest.write_text("u1\t1\t0\thello\nu1\t3\t0\tworld\n", encoding="utf-8")
    with pytest.raises(InputError):
        PipelineService(_toy_config(toy_dir, tmp_path, nbest_path=bad_nbest)).run()
    assert not (tmp_path / RESCORED_FILE).exists()
    assert (tmp_path / FAILED_FILE).is_file()


def test_runs_are_byte_identical(toy_dir, tmp_path):
    for name in ("a", "b"):
        PipelineService(_toy_config(toy_dir, tmp_path / name)).run()
    for artifact in (RESCORED_FILE, COSTS_FILE, LOSS_TRACE_FILE):
        assert (tmp_path / "a" / artifact).read_bytes() == (tmp_path / "b" / artifact).read_bytes()


def test_parallel_jobs_write_the_same_artifacts(toy_dir, tmp_path):
    PipelineService(_toy_config(toy_dir, tmp_path / "serial")).run()
    PipelineService(_toy_config(toy_dir, tmp_path / "parallel", jobs=2)).run()
    for artifact in (RESCORED_FILE, COSTS_FILE):
        assert (tmp_path / "serial" / artifact).read_bytes() == (
            tmp_path / "parallel" / artifact
        ).read_bytes()


def test_benchmark_connected_hypotheses_rise_to_the_top(tmp_path):
    paths = write_benchmark(tmp_path, n_utterances=20, n_hypotheses=5, connected_rank=3)
    config = resolve_config(
        None,
        {
            "kg_path": paths["kg"],
            "gazetteer_path": paths["gazetteer"],
            "nbest_path": paths["nbest"],
            "references_path": paths["references"],
            "output_dir": tmp_path / "out",
            **FAST,
        },
    )
    result = PipelineService(config).run()

    promoted = sum(
        1 for rescored in result.rescored if rescored.one_best.asr_rank == 3
    )
    assert promoted >= 18
    assert result.summary is not None
    assert result.summary.rescored_1best < result.summary.original_1best
    assert result.summary.oracle == 0.0


def test_global_scope_trains_once(toy_dir, tmp_path):
    config = _toy_config(toy_dir, tmp_path, embedding_scope="global", epochs=5)
    result = PipelineService(config).run()

    lines = (tmp_path / LOSS_TRACE_FILE).read_text(encoding="utf-8").splitlines()
    assert lines[0] == "epoch,mean_loss"
    assert len(lines) == 1 + 5
    assert result.rescored[0].one_best.text == "the eiffel tower stands in paris"


def test_global_scope_can_load_pretrained_embeddings(toy_dir, tmp_path):
    model, _ = train(load_ntriples(toy_dir / "kg.nt"), TrainConfig(dim=8, epochs=5, seed=1))
    embeddings = tmp_path / "toy.emb"
    save_model(model, embeddings)

    config = _toy_config(
        toy_dir, tmp_path / "out", embedding_scope="global", embeddings_path=embeddings
    )
    result = PipelineService(config).run()

    lines = (tmp_path / "out" / LOSS_TRACE_FILE).read_text(encoding="utf-8").splitlines()
    assert lines == ["epoch,mean_loss"]
    assert result.rescored[2].one_best.text == "the bear ate the honey"


def _fake_services(toy_dir: Path):
    """One handler standing in for both the molecule endpoint and the annotator."""
    kg_lines = [
        line
        for line in (toy_dir / "kg.nt").read_text(encoding="utf-8").splitlines()
        if line and not line.startswith("#")
    ]
    gazetteer = load_gazetteer(toy_dir / "gazetteer.tsv")

    def handle(request: httpx.Request) -> httpx.Response:
        if request.url.host == "kg.test":
            entity = request.url.params["entity"]
            lines = [line for line in kg_lines if f"<{entity}>" in line]
            return httpx.Response(200, text="".join(f"{line}\n" for line in lines))

        text = parse_qs(request.content.decode("utf-8"))["text"][0]
        resources = [
            {
                "@URI": a.iri,
                "@surfaceForm": a.surface,
                "@offset": str(a.offset),
                "@similarityScore": str(a.confidence),
            }
            for a in match_gazetteer(text, gazetteer)
        ]
        return httpx.Response(200, json={"@text": text, "Resources": resources})

    return handle


def test_remote_run_replays_offline_from_the_cache(toy_dir, tmp_path):
    remote = {
        "kg_path": None,
        "gazetteer_path": None,
        "kg_endpoint": "http://kg.test/molecules",
        "annotation_endpoint": "http://spotlight.test/rest/annotate",
        "cache_dir": tmp_path / "cache",
    }
    online = RecordingHandler(_fake_services(toy_dir))
    config = _toy_config(toy_dir, tmp_path / "online", **remote, offline=False)
    PipelineService(config, http_client=mock_http(online)).run()

    assert online.requests
    assert any((tmp_path / "cache" / "molecules").glob("*.nt"))
    assert any((tmp_path / "cache" / "annotations").glob("*.json"))
    assert _one_best_texts(tmp_path / "online" / RESCORED_FILE)["u3"] == "the bear ate the honey"

    offline = RecordingHandler([httpx.Response(500)])
    config = _toy_config(toy_dir, tmp_path / "offline", **remote, offline=True)
    PipelineService(config, http_client=mock_http(offline)).run()

    assert offline.requests == []
    assert (tmp_path / "online" / RESCORED_FILE).read_bytes() == (
        tmp_path / "offline" / RESCORED_FILE
    ).read_bytes()


def test_offline_run_with_a_cold_cache_fails_in_the_annotate_stage(toy_dir, tmp_path):
    config = _toy_config(
        toy_dir,
        tmp_path,
        gazetteer_path=None,
        annotation_endpoint="http://spotlight.test/rest/annotate",
        cache_dir=tmp_path / "cache",
        offline=True,
    )
    with pytest.raises(NetworkError) as excinfo:
        PipelineService(config, http_client=mock_http(RecordingHandler([]))).run()
    assert excinfo.value.stage == "2:annotate"
    assert excinfo.value.exit_code == 4


def test_pipeline_stage_wraps_unexpected_errors():
    with pytest.raises(InvariantError) as excinfo:
        with pipeline_stage(4, "u1"):
            raise ZeroDivisionError("boom")
    assert excinfo.value.stage == "4:embed"


# -- configuration ------------------------------------------------------------


def test_defaults():
    config = PipelineConfig()
    assert config.confidence_threshold == DEFAULT_CONFIDENCE_THRESHOLD == 0.3
    assert config.molecule_limit == DEFAULT_MOLECULE_LIMIT == 500
    assert config.n_max == DEFAULT_N_MAX == 30
    assert config.embedding_scope is EmbeddingScope.UTTERANCE


def test_toy_config_file_resolves(toy_dir):
    config = resolve_config(toy_dir / "pipeline.conf")
    assert config.kg_path == Path("data/toy/kg.nt")
    assert (config.dim, config.epochs, config.batch_size, config.seed) == (16, 50, 8, 7)
    assert config.train_config.dim == 16


def test_flags_override_the_config_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("# comment\ndim = 12\nseed = 4\ncost_field = subject\n", encoding="utf-8")
    config = resolve_config(path, {"dim": 20, "seed": None})
    assert config.dim == 20
    assert config.seed == 4
    assert config.cost_field.value == "subject"


def test_unknown_and_invalid_keys_are_config_errors(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("dimension = 12\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        resolve_config(path)
    with pytest.raises(ConfigError):
        resolve_config(None, {"confidence_threshold": 1.5})
    with pytest.raises(ConfigError):
        resolve_config(None, {"kg_path": "a.nt", "kg_endpoint": "http://kg.test"})
    with pytest.raises(ConfigError):
        resolve_config(None, {"embeddings_path": "model.emb"})
    with pytest.raises(ConfigError):
        resolve_config(tmp_path / "missing.conf")


def test_resolved_config_reads_back_identically(toy_dir, tmp_path):
    config = _toy_config(toy_dir, tmp_path, interpolation_weight=0.25, offline=True)
    config.write(tmp_path / CONFIG_FILE)

    assert "interpolation_weight = 0.25" in (tmp_path / CONFIG_FILE).read_text(encoding="utf-8")
    assert read_config_file(tmp_path / CONFIG_FILE)["kg_endpoint"] is None
    assert resolve_config(tmp_path / CONFIG_FILE) == config


def test_missing_inputs_are_reported_together(tmp_path):
    with pytest.raises(ConfigError) as excinfo:
        PipelineService(PipelineConfig(output_dir=tmp_path)).run()
    assert "nbest_path" in excinfo.value.message
    assert "kg_path or kg_endpoint" in excinfo.value.message
    assert (tmp_path / FAILED_FILE).is_file()
    failed = json.loads((tmp_path / FAILED_FILE).read_text(encoding="utf-8"))
    assert failed["stage"] == "1:load"


# -- molecule service ---------------------------------------------------------


def test_molecule_service_memoizes_and_tolerates_unknown_iris(toy_dir):
    store = load_ntriples(toy_dir / "kg.nt")
    service = MoleculeService(store=store, limit=2)
    first = service.molecules_for_iri(f"{EX}Paris")
    assert service.molecules_for_iri(f"{EX}Paris") is first
    assert len(first) == 2 and first.truncated
    assert len(service.molecules_for_iri(f"{EX}Nowhere")) == 0


def test_molecule_service_needs_exactly_one_source():
    with pytest.raises(ConfigError):
        MoleculeService()
