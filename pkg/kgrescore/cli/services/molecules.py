from kgrescore.core.errors import ConfigError
from kgrescore.core.http import KeyedLocks
from kgrescore.core.logging import get_logger
from kgrescore.kgstore.models import TripleStore
from kgrescore.kgstore.remote import RemoteMoleculeClient
from kgrescore.kgstore.schema import MoleculeSet

logger = get_logger()


class MoleculeService:
    """
    Molecule lookup by IRI against a local store or a remote endpoint.

    Results are memoized per (IRI, limit) for the lifetime of the service, so
    an entity mentioned by many hypotheses is extracted once, even when
    several worker threads ask for it at the same time.
    """

    def __init__(
        self,
        store: TripleStore | None = None,
        remote: RemoteMoleculeClient | None = None,
        limit: int = 500,
    ) -> None:
        if (store is None) == (remote is None):
            raise ConfigError("MoleculeService needs exactly one of a local store or a remote client")
        self.store = store
        self.remote = remote
        self.limit = limit
        self._memo: dict[tuple[str, int], MoleculeSet] = {}
        self._locks = KeyedLocks()

    def molecules_for_iri(self, iri: str, limit: int | None = None) -> MoleculeSet:
        limit = self.limit if limit is None else limit
        key = (iri, limit)
        with self._locks.hold(key):
            cached = self._memo.get(key)
            if cached is not None:
                return cached

            if self.store is not None:
                entity_id = self.store.entity_id(iri)
                if entity_id is None:
                    logger.debug(f"{iri} is not in the local graph; treated as unlinkable")
                    result = MoleculeSet(entity=iri)
                else:
                    result = self.store.molecules_for(entity_id, limit)
            else:
                assert self.remote is not None
                result = self.remote.fetch_molecules(iri, limit)

            if result.truncated:
                logger.debug(f"Molecules for {iri} truncated at {limit}")
            self._memo[key] = result
            return result

    def close(self) -> None:
        if self.remote is not None:
            self.remote.close()
