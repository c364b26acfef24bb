from typing import Protocol, Sequence

from kgrescore.annotate.gazetteer import match_gazetteer
from kgrescore.annotate.schema import Annotation, Gazetteer
from kgrescore.core.errors import ConfigError


class AnnotationSource(Protocol):
    def annotate(self, text: str) -> list[Annotation]: ...


def annotate_text(text: str, source: Gazetteer | AnnotationSource) -> list[Annotation]:
    if not text:
        raise ConfigError("Cannot annotate empty text")
    if isinstance(source, Gazetteer):
        return match_gazetteer(text, source)
    return source.annotate(text)


def filter_annotations(
    annotations: Sequence[Annotation], threshold: float
) -> list[Annotation]:
    if not 0.0 <= threshold <= 1.0:
        raise ConfigError(f"Confidence threshold must lie in [0, 1], got {threshold}")
    return [a for a in annotations if a.confidence >= threshold]
