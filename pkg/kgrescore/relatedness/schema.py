import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from kgrescore.kgstore.schema import Triple


class Aggregation(str, Enum):
    MIN = "min"
    SUM = "sum"


class Pairing(str, Enum):
    CROSS = "cross"
    ALIGNED = "aligned"


class MoleculeEmbedding(BaseModel):
    """Subject and object vectors of one molecule, copied from a single model."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    subject_vec: np.ndarray
    object_vec: np.ndarray
    triple: Triple | None = None

    @model_validator(mode="after")
    def check_vectors(self) -> "MoleculeEmbedding":
        if self.subject_vec.ndim != 1 or self.subject_vec.shape != self.object_vec.shape:
            raise ValueError("Subject and object vectors must be 1-D of equal length")
        return self

    @property
    def dim(self) -> int:
        return int(self.subject_vec.shape[0])


class RelatednessCost(BaseModel):
    model_config = ConfigDict(frozen=True)

    subject_cost: float = Field(ge=0.0)
    object_cost: float = Field(ge=0.0)
    total_cost: float = Field(ge=0.0)
    subject_deltas: tuple[float, ...] = ()
    object_deltas: tuple[float, ...] = ()
    aggregation: Aggregation = Aggregation.SUM
    pairing: Pairing = Pairing.CROSS
    n_entities: int = Field(default=2, ge=2)
    viterbi_cost: float | None = Field(default=None, ge=0.0)
    viterbi_path: tuple[int, ...] | None = None

    @model_validator(mode="after")
    def check_decomposition(self) -> "RelatednessCost":
        if not math.isclose(
            self.total_cost, self.subject_cost + self.object_cost, rel_tol=1e-12, abs_tol=1e-9
        ):
            raise ValueError("total_cost must equal subject_cost + object_cost")
        # Deltas are absent when a cost is read back from a report
        for cost, deltas in (
            (self.subject_cost, self.subject_deltas),
            (self.object_cost, self.object_deltas),
        ):
            if not deltas:
                continue
            expected = sum(deltas) if self.aggregation is Aggregation.SUM else min(deltas)
            if not math.isclose(cost, expected, rel_tol=1e-12, abs_tol=1e-9):
                raise ValueError(f"cost {cost} disagrees with its deltas under {self.aggregation.value}")
        return self

    def field(self, name: str) -> float:
        """Cost selected by a rescoring field name (total, subject, object or viterbi)."""
        value = {
            "total": self.total_cost,
            "subject": self.subject_cost,
            "object": self.object_cost,
            "viterbi": self.viterbi_cost,
        }[name]
        if value is None:
            raise ValueError(f"No {name} cost recorded")
        return value
