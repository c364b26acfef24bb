from enum import Enum
from pydantic import BaseModel, ConfigDict, Field


class NormKind(str, Enum):
    L1 = "L1"
    L2 = "L2"

    @property
    def order(self) -> int:
        return 1 if self is NormKind.L1 else 2


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    dim: int = Field(default=50, ge=1)
    margin: float = Field(default=1.0, ge=0.0)
    learning_rate: float = Field(default=0.01, gt=0.0)
    epochs: int = Field(default=100, ge=0)
    batch_size: int = Field(default=128, ge=1)
    seed: int = Field(default=0, ge=0)
    norm_kind: NormKind = NormKind.L2
    # >1 switches to lock-free concurrent minibatch updates (not reproducible)
    workers: int = Field(default=1, ge=1)


class LinkPredictionReport(BaseModel):
    count: int
    mean_rank: float
    mean_reciprocal_rank: float
    hits_at: dict[int, float]
