import hashlib
import os
import tempfile
import threading
import time
from collections import defaultdict
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable, Iterator, Mapping, TypeVar

import httpx

from kgrescore.core.config import settings
from kgrescore.core.errors import NetworkError, ProtocolError
from kgrescore.core.logging import get_logger

logger = get_logger()

T = TypeVar("T")


class KeyedLocks:
    """One lock per key, so concurrent callers of the same key run one at a time."""

    def __init__(self) -> None:
        self._guard = threading.Lock()
        self._locks: defaultdict[object, threading.Lock] = defaultdict(threading.Lock)

    @contextmanager
    def hold(self, key: object) -> Iterator[None]:
        with self._guard:
            lock = self._locks[key]
        with lock:
            yield


class ResponseCache:
    """
    Raw response bodies on disk, one file per request.

    Layout: ``<root>/<namespace>/<sha256><suffix>``. The hash covers the
    request parts joined by newlines, so the same directory can be shipped
    as a recorded-fixture replay set.
    """

    def __init__(self, root: Path, namespace: str, suffix: str) -> None:
        self.directory = Path(root) / namespace
        self.suffix = suffix

    @staticmethod
    def key(*parts: object) -> str:
        joined = "\n".join(str(part) for part in parts)
        return hashlib.sha256(joined.encode("utf-8")).hexdigest()

    def path(self, key: str) -> Path:
        return self.directory / f"{key}{self.suffix}"

    def get(self, key: str) -> str | None:
        path = self.path(key)
        if not path.is_file():
            return None
        logger.debug(f"Cache hit: {path}")
        return path.read_text(encoding="utf-8")

    def put(self, key: str, body: str) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.path(key)
        with tempfile.NamedTemporaryFile(
            "w",
            encoding="utf-8",
            dir=self.directory,
            prefix=f".{path.name}.",
            suffix=".tmp",
            delete=False,
        ) as stream:
            stream.write(body)
        os.replace(stream.name, path)
        logger.debug(f"Cached response at {path}")

    def evict(self, key: str) -> None:
        self.path(key).unlink(missing_ok=True)
        logger.debug(f"Evicted cache entry {key}")


class CachedHttpClient:
    """
    Retrying HTTP access with a read-through disk cache.

    A body is cached only after ``parse`` accepted it. Concurrent fetches of
    the same key are single-flight: later callers wait and read the cache.
    """

    def __init__(
        self,
        endpoint: str,
        cache: ResponseCache | None,
        *,
        client: httpx.Client | None = None,
        offline: bool | None = None,
        max_retries: int | None = None,
        retry_delay: float | None = None,
        timeout: float | None = None,
    ) -> None:
        self.endpoint = endpoint
        self.cache = cache
        self.offline = settings.OFFLINE if offline is None else offline
        self.max_retries = max(
            1, settings.HTTP_MAX_RETRIES if max_retries is None else max_retries
        )
        self.retry_delay = (
            settings.HTTP_RETRY_DELAY if retry_delay is None else retry_delay
        )
        self._owns_client = client is None
        self._client = client or httpx.Client(
            timeout=settings.HTTP_TIMEOUT if timeout is None else timeout,
            headers={"User-Agent": settings.USER_AGENT},
        )
        self._in_flight = KeyedLocks()
        self.requests_made = 0

    def close(self) -> None:
        if self._owns_client:
            self._client.close()

    def fetch(
        self,
        cache_key: str,
        method: str,
        parse: Callable[[str], T],
        *,
        params: Mapping[str, Any] | None = None,
        data: Mapping[str, Any] | None = None,
        headers: Mapping[str, str] | None = None,
    ) -> T:
        with self._in_flight.hold(cache_key):
            if self.cache is not None:
                cached = self.cache.get(cache_key)
                if cached is not None:
                    try:
                        return parse(cached)
                    except ProtocolError:
                        self.cache.evict(cache_key)
                        if self.offline:
                            raise
                        logger.warning(
                            f"Cached response from {self.endpoint} no longer parses; fetching again"
                        )

            if self.offline:
                raise NetworkError(
                    f"Cache miss for {self.endpoint} while offline",
                    retryable=False,
                    action="Warm the cache first or disable offline mode.",
                    endpoint=self.endpoint,
                )

            body = self._request(method, params=params, data=data, headers=headers)
            result = parse(body)
            if self.cache is not None:
                self.cache.put(cache_key, body)
            return result

    def _request(
        self,
        method: str,
        *,
        params: Mapping[str, Any] | None,
        data: Mapping[str, Any] | None,
        headers: Mapping[str, str] | None,
    ) -> str:
        last_error: NetworkError | None = None

        for attempt in range(self.max_retries):
            self.requests_made += 1
            try:
                response = self._client.request(
                    method,
                    self.endpoint,
                    params=params,
                    data=data,
                    headers=headers,
                )
            except httpx.TransportError as e:
                last_error = NetworkError(
                    f"Request to {self.endpoint} failed: {e}",
                    retryable=True,
                    endpoint=self.endpoint,
                )
            else:
                if response.is_success:
                    if attempt > 0:
                        logger.info(
                            f"Request to {self.endpoint} recovered after {attempt + 1} attempts"
                        )
                    return response.text

                retryable = response.status_code >= 500 or response.status_code == 429
                last_error = NetworkError(
                    f"{self.endpoint} answered HTTP {response.status_code}",
                    retryable=retryable,
                    endpoint=self.endpoint,
                    status_code=response.status_code,
                )
                if not retryable:
                    logger.error(str(last_error))
                    raise last_error

            if attempt == self.max_retries - 1:
                break
            wait = (attempt + 1) * self.retry_delay
            logger.warning(
                f"Attempt {attempt + 1} against {self.endpoint} failed: {last_error}. Retrying in {wait} seconds..."
            )
            time.sleep(wait)

        logger.error(
            f"Request to {self.endpoint} failed after {self.max_retries} attempts: {last_error}"
        )
        assert last_error is not None
        raise last_error
