from enum import Enum
from pathlib import Path
from typing import Any, Mapping

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from kgrescore.core.errors import ConfigError
from kgrescore.nbest.parser import DEFAULT_N_MAX
from kgrescore.nbest.schema import CostField
from kgrescore.relatedness.schema import Aggregation, Pairing
from kgrescore.transe.schema import NormKind, TrainConfig

DEFAULT_CONFIDENCE_THRESHOLD = 0.3
DEFAULT_MOLECULE_LIMIT = 500


class EmbeddingScope(str, Enum):
    UTTERANCE = "utterance"
    GLOBAL = "global"


class PipelineConfig(BaseModel):
    """Every experiment parameter of one rescoring run."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    # Step 1 inputs
    kg_path: Path | None = None
    kg_endpoint: str | None = None
    gazetteer_path: Path | None = None
    annotation_endpoint: str | None = None
    nbest_path: Path | None = None
    references_path: Path | None = None
    lenient: bool = False
    include_literals: bool = False
    n_max: int = Field(default=DEFAULT_N_MAX, ge=1)

    # Steps 2 and 3
    confidence_threshold: float = Field(default=DEFAULT_CONFIDENCE_THRESHOLD, ge=0.0, le=1.0)
    molecule_limit: int = Field(default=DEFAULT_MOLECULE_LIMIT, ge=1)

    # Step 4
    embedding_scope: EmbeddingScope = EmbeddingScope.UTTERANCE
    embeddings_path: Path | None = None
    dim: int = Field(default=50, ge=1)
    margin: float = Field(default=1.0, ge=0.0)
    learning_rate: float = Field(default=0.01, gt=0.0)
    epochs: int = Field(default=100, ge=0)
    batch_size: int = Field(default=128, ge=1)
    seed: int = Field(default=0, ge=0)
    embedding_norm: NormKind = NormKind.L2
    norm_kind: NormKind = NormKind.L1
    aggregation: Aggregation = Aggregation.SUM
    pairing: Pairing = Pairing.CROSS

    # Step 5
    cost_field: CostField = CostField.TOTAL
    interpolation_weight: float | None = Field(default=None, ge=0.0, le=1.0)

    output_dir: Path = Path("output")
    jobs: int = Field(default=1, ge=1)
    cache_dir: Path | None = None
    offline: bool | None = None

    @model_validator(mode="after")
    def check_sources(self) -> "PipelineConfig":
        if self.kg_path is not None and self.kg_endpoint is not None:
            raise ValueError("Set kg_path or kg_endpoint, not both")
        if self.gazetteer_path is not None and self.annotation_endpoint is not None:
            raise ValueError("Set gazetteer_path or annotation_endpoint, not both")
        if self.embeddings_path is not None and self.embedding_scope is not EmbeddingScope.GLOBAL:
            raise ValueError("embeddings_path requires embedding_scope = global")
        return self

    @property
    def train_config(self) -> TrainConfig:
        return TrainConfig(
            dim=self.dim,
            margin=self.margin,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            norm_kind=self.embedding_norm,
        )

    def require_inputs(self) -> None:
        """A full pipeline run needs a graph, an annotator and an N-best file."""
        missing = []
        if self.kg_path is None and self.kg_endpoint is None:
            missing.append("kg_path or kg_endpoint")
        if self.gazetteer_path is None and self.annotation_endpoint is None:
            missing.append("gazetteer_path or annotation_endpoint")
        if self.nbest_path is None:
            missing.append("nbest_path")
        if missing:
            raise ConfigError(
                f"Missing required settings: {', '.join(missing)}",
                action="Set them in the config file or pass them as flags.",
            )

    def dump(self) -> str:
        """Sorted ``key = value`` lines; unset optional values are left empty."""
        lines = [
            f"{key} = {_format_value(value)}"
            for key, value in sorted(self.model_dump(mode="json").items())
        ]
        return "\n".join(lines) + "\n"

    def write(self, path: Path) -> None:
        Path(path).write_text(self.dump(), encoding="utf-8")


def _format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def read_config_file(path: Path) -> dict[str, str | None]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}", path=str(path))
    values = dotenv_values(path)
    return {key.strip().lower(): (value if value != "" else None) for key, value in values.items()}


def resolve_config(
    config_file: Path | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> PipelineConfig:
    """Built-in defaults, then the config file, then explicit overrides (flags)."""
    values: dict[str, Any] = {}
    if config_file is not None:
        values.update(read_config_file(config_file))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})

    unknown = sorted(set(values) - set(PipelineConfig.model_fields))
    if unknown:
        raise ConfigError(
            f"Unknown config keys: {', '.join(unknown)}",
            action="Remove them or check their spelling.",
            keys=unknown,
        )
    # Empty file values fall back to the defaults
    values = {k: v for k, v in values.items() if v is not None}

    try:
        return PipelineConfig(**values)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}"
            for err in e.errors()
        )
        raise ConfigError(f"Invalid configuration: {problems}") from e
