"""Option aliases shared by the commands that resolve a PipelineConfig. Flags mirror field names."""

from pathlib import Path
from typing import Annotated

import typer

from kgrescore.cli.schema import EmbeddingScope
from kgrescore.nbest.schema import CostField
from kgrescore.relatedness.schema import Aggregation, Pairing
from kgrescore.transe.schema import NormKind

ConfigFile = Annotated[
    Path | None,
    typer.Option("--config", "-c", help="Line-oriented `key = value` config file; flags win."),
]

KgPath = Annotated[Path | None, typer.Option(help="Local N-Triples knowledge graph.")]
KgEndpoint = Annotated[str | None, typer.Option(help="Remote molecule endpoint.")]
GazetteerPath = Annotated[Path | None, typer.Option(help="Offline gazetteer TSV.")]
AnnotationEndpoint = Annotated[
    str | None, typer.Option(help="Spotlight-compatible /annotate endpoint.")
]
NbestPath = Annotated[Path | None, typer.Option(help="N-best hypotheses file.")]
ReferencesPath = Annotated[Path | None, typer.Option(help="Reference transcripts file.")]
Lenient = Annotated[
    bool | None, typer.Option("--lenient/--strict", help="Skip malformed KG lines.")
]
IncludeLiterals = Annotated[
    bool | None,
    typer.Option("--include-literals/--no-include-literals", help="Embed literal objects."),
]
NMax = Annotated[int | None, typer.Option(help="Keep at most this many hypotheses per utterance.")]

ConfidenceThreshold = Annotated[
    float | None, typer.Option(help="Drop annotations below this confidence.")
]
MoleculeLimit = Annotated[int | None, typer.Option(help="Molecules kept per entity.")]

EmbeddingScopeOpt = Annotated[
    EmbeddingScope | None, typer.Option("--embedding-scope", help="One model per utterance or one global model.")
]
EmbeddingsPath = Annotated[
    Path | None, typer.Option(help="Pretrained embeddings (global scope only).")
]
Dim = Annotated[int | None, typer.Option(help="Embedding dimension.")]
Margin = Annotated[float | None, typer.Option(help="Hinge margin.")]
LearningRate = Annotated[float | None, typer.Option(help="SGD learning rate.")]
Epochs = Annotated[int | None, typer.Option(help="Training epochs.")]
BatchSize = Annotated[int | None, typer.Option(help="Minibatch size.")]
Seed = Annotated[int | None, typer.Option(help="Random seed.")]
EmbeddingNorm = Annotated[
    NormKind | None, typer.Option("--embedding-norm", help="Dissimilarity norm for training.")
]
NormKindOpt = Annotated[
    NormKind | None, typer.Option("--norm-kind", help="Distance norm for relatedness costs.")
]
AggregationOpt = Annotated[
    Aggregation | None, typer.Option("--aggregation", help="Combine adjacency deltas by sum or min.")
]
PairingOpt = Annotated[
    Pairing | None, typer.Option("--pairing", help="Compare molecules all-pairs or index-aligned.")
]

CostFieldOpt = Annotated[
    CostField | None, typer.Option("--cost-field", help="Cost that orders the rescored list.")
]
InterpolationWeight = Annotated[
    float | None, typer.Option(help="Blend normalized cost with the ASR score (0..1).")
]

OutputDir = Annotated[Path | None, typer.Option(help="Directory for the run's artifacts.")]
Jobs = Annotated[int | None, typer.Option(help="Utterances processed in parallel.")]
CacheDir = Annotated[Path | None, typer.Option(help="Response cache directory.")]
Offline = Annotated[
    bool | None, typer.Option("--offline/--online", help="Never touch the network on a cache miss.")
]
