import re
from pathlib import Path

from pydantic import ValidationError

from kgrescore.annotate.schema import (
    Annotation,
    Gazetteer,
    GazetteerEntry,
    normalize_surface,
)
from kgrescore.core.errors import InputError, MalformedLine
from kgrescore.core.logging import get_logger

logger = get_logger()

_WORD = re.compile(r"\w+")


def load_gazetteer(path: Path, default_confidence: float = 1.0) -> Gazetteer:
    """Read ``surface<TAB>iri[<TAB>confidence]`` lines; ``#`` lines are comments."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"Gazetteer file not found: {path}", path=str(path))

    entries: dict[str, GazetteerEntry] = {}
    with path.open("r", encoding="utf-8") as stream:
        for line_number, line in enumerate(stream, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) not in (2, 3):
                raise MalformedLine(line_number, "expected surface, iri and optional confidence", source=str(path))

            key = normalize_surface(fields[0])
            if not key:
                raise MalformedLine(line_number, "empty surface form", source=str(path))
            if key in entries:
                raise MalformedLine(line_number, f"duplicate surface form '{key}'", source=str(path))
            try:
                confidence = float(fields[2]) if len(fields) == 3 else default_confidence
                entries[key] = GazetteerEntry(iri=fields[1].strip(), confidence=confidence)
            except (ValueError, ValidationError) as e:
                raise MalformedLine(line_number, str(e), source=str(path)) from e

    logger.info(f"Loaded gazetteer with {len(entries)} surface forms from {path}")
    return Gazetteer(entries=entries)


def match_gazetteer(text: str, gazetteer: Gazetteer) -> list[Annotation]:
    """
    Case-insensitive matching at word boundaries. All candidate spans are
    collected, then accepted longest first (leftmost start on ties) unless
    they overlap an already accepted span.
    """
    tokens = [(m.start(), m.end()) for m in _WORD.finditer(text)]
    candidates: list[tuple[int, int, GazetteerEntry]] = []

    for i, (start, _) in enumerate(tokens):
        for _, end in tokens[i:]:
            key = normalize_surface(text[start:end])
            if len(key) > gazetteer.max_key_length:
                break
            entry = gazetteer.entries.get(key)
            if entry is not None:
                candidates.append((start, end, entry))

    candidates.sort(key=lambda c: (-(c[1] - c[0]), c[0]))
    accepted: list[tuple[int, int, GazetteerEntry]] = []
    for start, end, entry in candidates:
        if all(end <= a_start or start >= a_end for a_start, a_end, _ in accepted):
            accepted.append((start, end, entry))

    accepted.sort(key=lambda c: c[0])
    return [
        Annotation(
            surface=text[start:end],
            offset=start,
            iri=entry.iri,
            confidence=entry.confidence,
        )
        for start, end, entry in accepted
    ]
