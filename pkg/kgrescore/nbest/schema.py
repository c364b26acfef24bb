from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from kgrescore.relatedness.schema import RelatednessCost


class CostField(str, Enum):
    TOTAL = "total"
    SUBJECT = "subject"
    OBJECT = "object"
    VITERBI = "viterbi"


class Hypothesis(BaseModel):
    model_config = ConfigDict(frozen=True)

    utterance_id: str = Field(min_length=1)
    asr_rank: int = Field(ge=1)
    asr_score: float
    words: tuple[str, ...] = Field(min_length=1)

    @property
    def text(self) -> str:
        return " ".join(self.words)


class NBestList(BaseModel):
    model_config = ConfigDict(frozen=True)

    utterance_id: str
    hypotheses: tuple[Hypothesis, ...] = Field(min_length=1)
    reference: str | None = None

    @model_validator(mode="after")
    def check_ranks(self) -> "NBestList":
        ranks = [h.asr_rank for h in self.hypotheses]
        if ranks != list(range(1, len(ranks) + 1)):
            raise ValueError(f"Ranks {ranks} must run 1..{len(ranks)} in order")
        if any(h.utterance_id != self.utterance_id for h in self.hypotheses):
            raise ValueError("Every hypothesis must belong to the list's utterance")
        return self

    def __len__(self) -> int:
        return len(self.hypotheses)


class RescoredEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    hypothesis: Hypothesis
    # None marks a hypothesis that could not be scored
    cost: RelatednessCost | None
    new_rank: int = Field(ge=1)
    sort_key: float | None = None

    @property
    def scored(self) -> bool:
        return self.cost is not None


class RescoredList(BaseModel):
    model_config = ConfigDict(frozen=True)

    utterance_id: str
    entries: tuple[RescoredEntry, ...]
    cost_field: CostField = CostField.TOTAL

    @model_validator(mode="after")
    def check_entries(self) -> "RescoredList":
        ranks = [e.new_rank for e in self.entries]
        if ranks != list(range(1, len(ranks) + 1)):
            raise ValueError("New ranks must be dense 1..N in entry order")
        seen_unscored = False
        for entry in self.entries:
            if not entry.scored:
                seen_unscored = True
            elif seen_unscored:
                raise ValueError("Scored entries must precede unscored ones")
        return self

    @property
    def one_best(self) -> Hypothesis:
        return self.entries[0].hypothesis

    @property
    def hypotheses(self) -> tuple[Hypothesis, ...]:
        return tuple(e.hypothesis for e in self.entries)


class WerResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    substitutions: int = Field(ge=0)
    deletions: int = Field(ge=0)
    insertions: int = Field(ge=0)
    reference_length: int = Field(ge=1)

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer(self) -> float:
        return self.errors / self.reference_length


class WerSummary(BaseModel):
    n_utterances: int
    reference_words: int
    original_1best: float
    rescored_1best: float
    oracle: float
