from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator


def normalize_surface(text: str) -> str:
    """Lowercase and collapse whitespace runs to single spaces."""
    return " ".join(text.lower().split())


class Annotation(BaseModel):
    model_config = ConfigDict(frozen=True)

    surface: str = Field(min_length=1)
    offset: int = Field(ge=0)
    iri: str = Field(min_length=1)
    confidence: float = Field(ge=0.0, le=1.0)

    @property
    def end(self) -> int:
        return self.offset + len(self.surface)


class GazetteerEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    iri: str = Field(min_length=1)
    confidence: float = Field(default=1.0, ge=0.0, le=1.0)


class Gazetteer(BaseModel):
    model_config = ConfigDict(frozen=True)

    entries: dict[str, GazetteerEntry]

    _max_key_length: int = PrivateAttr(default=0)

    @field_validator("entries")
    @classmethod
    def keys_are_normalized(cls, entries: dict[str, GazetteerEntry]) -> dict[str, GazetteerEntry]:
        for key in entries:
            if not key or key != normalize_surface(key):
                raise ValueError(f"Gazetteer key '{key}' is empty or not normalized")
        return entries

    @model_validator(mode="after")
    def longest_key(self) -> "Gazetteer":
        self._max_key_length = max((len(k) for k in self.entries), default=0)
        return self

    @classmethod
    def from_pairs(
        cls, pairs: dict[str, str], confidence: float = 1.0
    ) -> "Gazetteer":
        return cls(
            entries={
                normalize_surface(surface): GazetteerEntry(iri=iri, confidence=confidence)
                for surface, iri in pairs.items()
            }
        )

    @property
    def max_key_length(self) -> int:
        return self._max_key_length

    def lookup(self, surface: str) -> GazetteerEntry | None:
        return self.entries.get(normalize_surface(surface))


class SpotlightResource(BaseModel):
    model_config = ConfigDict(extra="ignore", populate_by_name=True)

    uri: str = Field(alias="@URI", min_length=1)
    surface_form: str = Field(alias="@surfaceForm", min_length=1)
    offset: int = Field(alias="@offset", ge=0)
    similarity_score: float = Field(alias="@similarityScore", ge=0.0, le=1.0)


class SpotlightResponse(BaseModel):
    model_config = ConfigDict(extra="ignore", populate_by_name=True)

    resources: list[SpotlightResource] = Field(default_factory=list, alias="Resources")

    @field_validator("resources", mode="before")
    @classmethod
    def missing_resources(cls, value):
        # The service drops the key (or sends null) when nothing was annotated
        return [] if value is None else value
