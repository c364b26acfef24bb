import io

import httpx

from kgrescore.core.config import settings
from kgrescore.core.errors import ConfigError, MalformedLine, ProtocolError
from kgrescore.core.http import CachedHttpClient, ResponseCache
from kgrescore.core.logging import get_logger
from kgrescore.kgstore.models import TripleStore
from kgrescore.kgstore.parser import parse_ntriples
from kgrescore.kgstore.schema import MoleculeSet

logger = get_logger()


class RemoteMoleculeClient:
    """
    Molecule fetch against an endpoint answering
    ``GET <endpoint>?entity=<IRI>&limit=<n>`` with an N-Triples body.
    """

    def __init__(
        self,
        endpoint: str,
        *,
        cache_dir=None,
        client: httpx.Client | None = None,
        offline: bool | None = None,
        max_retries: int | None = None,
        retry_delay: float | None = None,
    ) -> None:
        self.endpoint = endpoint
        cache = ResponseCache(cache_dir or settings.CACHE_DIR, "molecules", ".nt")
        self.http = CachedHttpClient(
            endpoint,
            cache,
            client=client,
            offline=offline,
            max_retries=max_retries,
            retry_delay=retry_delay,
        )

    @property
    def cache(self) -> ResponseCache:
        assert self.http.cache is not None
        return self.http.cache

    @property
    def requests_made(self) -> int:
        return self.http.requests_made

    def close(self) -> None:
        self.http.close()

    def cache_key(self, entity: str, limit: int) -> str:
        return ResponseCache.key(self.endpoint, entity, limit)

    def _parse_body(self, body: str) -> TripleStore:
        try:
            return parse_ntriples(io.StringIO(body), source=self.endpoint)
        except MalformedLine as e:
            raise ProtocolError(
                f"Unparseable molecule response from {self.endpoint}: {e.reason}",
                endpoint=self.endpoint,
            ) from e

    def fetch_molecules(self, entity: str, limit: int) -> MoleculeSet:
        if limit < 1:
            raise ConfigError(f"Molecule limit must be at least 1, got {limit}")

        # One extra row tells us whether the endpoint had more than `limit`
        store = self.http.fetch(
            self.cache_key(entity, limit),
            "GET",
            self._parse_body,
            params={"entity": entity, "limit": limit + 1},
            headers={"Accept": "application/n-triples"},
        )

        entity_id = store.entity_id(entity)
        if entity_id is None:
            logger.debug(f"{self.endpoint} returned no molecules for {entity}")
            return MoleculeSet(entity=entity)

        local = store.molecules_for(entity_id, limit)
        # literal rows count against the endpoint's page but not against `limit`
        truncated = local.truncated or len(store) > limit
        logger.debug(f"Fetched {len(local)} molecules for {entity} (truncated={truncated})")
        return MoleculeSet(entity=entity, molecules=local.molecules, truncated=truncated)


def fetch_remote_molecules(
    endpoint: str,
    entity: str,
    limit: int,
    *,
    client: RemoteMoleculeClient | None = None,
) -> MoleculeSet:
    if client is not None:
        return client.fetch_molecules(entity, limit)
    owned = RemoteMoleculeClient(endpoint)
    try:
        return owned.fetch_molecules(entity, limit)
    finally:
        owned.close()


def merge_molecules(*sets: MoleculeSet) -> TripleStore:
    """Graph over the union of several molecule sets, in the order given."""
    return TripleStore.from_triples(
        triple for molecule_set in sets for triple in molecule_set.molecules
    )
