import httpx
from pydantic import ValidationError

from kgrescore.annotate.schema import Annotation, SpotlightResponse
from kgrescore.core.config import settings
from kgrescore.core.errors import ProtocolError
from kgrescore.core.http import CachedHttpClient, ResponseCache
from kgrescore.core.logging import get_logger

logger = get_logger()


def parse_spotlight_response(text: str, body: str) -> list[Annotation]:
    """Turn a Spotlight JSON body into annotations that respect the span invariants."""
    try:
        response = SpotlightResponse.model_validate_json(body)
    except ValidationError as e:
        raise ProtocolError(
            f"Unparseable annotation response: {e.errors()[0]['msg']}",
            action="Check that the endpoint speaks the Spotlight JSON format.",
        ) from e

    resources = sorted(
        response.resources, key=lambda r: (r.offset, -len(r.surface_form))
    )
    annotations: list[Annotation] = []
    for resource in resources:
        end = resource.offset + len(resource.surface_form)
        if text[resource.offset : end] != resource.surface_form:
            logger.warning(
                f"Dropping annotation '{resource.surface_form}' at {resource.offset}: "
                "surface does not match the text"
            )
            continue
        if annotations and resource.offset < annotations[-1].end:
            logger.warning(
                f"Dropping annotation '{resource.surface_form}' at {resource.offset}: "
                f"overlaps '{annotations[-1].surface}'"
            )
            continue
        annotations.append(
            Annotation(
                surface=resource.surface_form,
                offset=resource.offset,
                iri=resource.uri,
                confidence=resource.similarity_score,
            )
        )
    return annotations


class SpotlightClient:
    """Annotation through a Spotlight-compatible ``/annotate`` endpoint."""

    def __init__(
        self,
        endpoint: str,
        confidence: float = 0.3,
        *,
        cache_dir=None,
        client: httpx.Client | None = None,
        offline: bool | None = None,
        max_retries: int | None = None,
        retry_delay: float | None = None,
    ) -> None:
        self.endpoint = endpoint
        self.confidence = confidence
        cache = ResponseCache(cache_dir or settings.CACHE_DIR, "annotations", ".json")
        self.http = CachedHttpClient(
            endpoint,
            cache,
            client=client,
            offline=offline,
            max_retries=max_retries,
            retry_delay=retry_delay,
        )

    @property
    def requests_made(self) -> int:
        return self.http.requests_made

    def close(self) -> None:
        self.http.close()

    def annotate(self, text: str) -> list[Annotation]:
        annotations = self.http.fetch(
            ResponseCache.key(self.endpoint, text, self.confidence),
            "POST",
            lambda body: parse_spotlight_response(text, body),
            data={"text": text, "confidence": str(self.confidence)},
            headers={"Accept": "application/json"},
        )
        logger.debug(f"Spotlight linked {len(annotations)} mentions in '{text}'")
        return annotations
