import csv
import sys
from pathlib import Path
from typing import Annotated

import typer

from kgrescore.cli import options as opt
from kgrescore.cli.schema import resolve_config
from kgrescore.cli.services.pipeline import PipelineService
from kgrescore.cli.utils import err_console, exit_on_error
from kgrescore.core.errors import ConfigError
from kgrescore.nbest.parser import load_nbest

ANNOTATION_COLUMNS = ("utt_id", "rank", "offset", "surface", "iri", "confidence")


@exit_on_error
def annotate(
    nbest_path: Annotated[Path, typer.Argument(help="N-best hypotheses file.")],
    config: opt.ConfigFile = None,
    gazetteer_path: opt.GazetteerPath = None,
    annotation_endpoint: opt.AnnotationEndpoint = None,
    confidence_threshold: opt.ConfidenceThreshold = None,
    n_max: opt.NMax = None,
    cache_dir: opt.CacheDir = None,
    offline: opt.Offline = None,
    output: Annotated[Path | None, typer.Option(help="TSV output; stdout when omitted.")] = None,
) -> None:
    """Link entity mentions in every hypothesis and keep those above the threshold."""
    resolved = resolve_config(
        config,
        {
            "nbest_path": nbest_path,
            "gazetteer_path": gazetteer_path,
            "annotation_endpoint": annotation_endpoint,
            "confidence_threshold": confidence_threshold,
            "n_max": n_max,
            "cache_dir": cache_dir,
            "offline": offline,
        },
    )
    if resolved.gazetteer_path is None and resolved.annotation_endpoint is None:
        raise ConfigError("Pass --gazetteer-path or --annotation-endpoint")

    service = PipelineService(resolved)
    lists = load_nbest(nbest_path, n_max=resolved.n_max)
    stream = output.open("w", encoding="utf-8", newline="") if output is not None else sys.stdout
    kept = 0
    try:
        writer = csv.writer(stream, delimiter="\t", lineterminator="\n")
        writer.writerow(ANNOTATION_COLUMNS)
        for nbest in lists:
            for hypothesis in nbest.hypotheses:
                for annotation in service.annotate(hypothesis.text):
                    kept += 1
                    writer.writerow(
                        [
                            nbest.utterance_id,
                            hypothesis.asr_rank,
                            annotation.offset,
                            annotation.surface,
                            annotation.iri,
                            repr(annotation.confidence),
                        ]
                    )
    finally:
        service.close()
        if output is not None:
            stream.close()

    err_console.print(f"Kept {kept} annotations at confidence >= {resolved.confidence_threshold}")
