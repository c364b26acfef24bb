from pathlib import Path
from typing import Iterable, TextIO

from pydantic import ValidationError

from kgrescore.core.errors import DuplicateRank, GappedRanks, InputError, MalformedLine
from kgrescore.core.logging import get_logger
from kgrescore.nbest.schema import Hypothesis, NBestList, RescoredList

logger = get_logger()

DEFAULT_N_MAX = 30


def parse_nbest(
    stream: TextIO | Iterable[str],
    n_max: int = DEFAULT_N_MAX,
    source: str | None = None,
) -> list[NBestList]:
    """``utt_id<TAB>rank<TAB>asr_score<TAB>text`` lines, grouped per utterance in file order."""
    grouped: dict[str, dict[int, Hypothesis]] = {}

    for line_number, line in enumerate(stream, start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        fields = line.split("\t", 3)
        if len(fields) != 4:
            raise MalformedLine(line_number, "expected utt_id, rank, asr_score and text", source=source)
        utterance_id, rank_field, score_field, text = fields
        try:
            hypothesis = Hypothesis(
                utterance_id=utterance_id.strip(),
                asr_rank=int(rank_field),
                asr_score=float(score_field),
                words=tuple(text.split()),
            )
        except (ValueError, ValidationError) as e:
            raise MalformedLine(line_number, str(e).splitlines()[0], source=source) from e

        by_rank = grouped.setdefault(hypothesis.utterance_id, {})
        if hypothesis.asr_rank in by_rank:
            raise DuplicateRank(hypothesis.utterance_id, hypothesis.asr_rank)
        by_rank[hypothesis.asr_rank] = hypothesis

    lists: list[NBestList] = []
    for utterance_id, by_rank in grouped.items():
        ranks = sorted(by_rank)
        if ranks != list(range(1, len(ranks) + 1)):
            raise GappedRanks(utterance_id, ranks)
        if len(ranks) > n_max:
            logger.warning(
                f"Utterance '{utterance_id}' has {len(ranks)} hypotheses; keeping the best {n_max}"
            )
            ranks = ranks[:n_max]
        lists.append(
            NBestList(
                utterance_id=utterance_id,
                hypotheses=tuple(by_rank[r] for r in ranks),
            )
        )

    logger.info(f"Parsed {len(lists)} N-best lists")
    return lists


def parse_references(
    stream: TextIO | Iterable[str], source: str | None = None
) -> dict[str, str]:
    references: dict[str, str] = {}
    for line_number, line in enumerate(stream, start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        fields = line.split("\t", 1)
        if len(fields) != 2 or not fields[1].strip():
            raise MalformedLine(line_number, "expected utt_id and reference text", source=source)
        utterance_id = fields[0].strip()
        if utterance_id in references:
            raise MalformedLine(line_number, f"duplicate reference for '{utterance_id}'", source=source)
        references[utterance_id] = fields[1].strip()
    return references


def _open_input(path: Path, what: str) -> TextIO:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{what} file not found: {path}", path=str(path))
    return path.open("r", encoding="utf-8")


def load_nbest(path: Path, n_max: int = DEFAULT_N_MAX) -> list[NBestList]:
    with _open_input(path, "N-best") as stream:
        return parse_nbest(stream, n_max=n_max, source=str(path))


def load_references(path: Path) -> dict[str, str]:
    with _open_input(path, "References") as stream:
        return parse_references(stream, source=str(path))


def write_nbest(lists: Iterable[NBestList | RescoredList], stream: TextIO) -> None:
    """Same four columns; a rescored list writes its new ranks in new order."""
    for nbest in lists:
        if isinstance(nbest, RescoredList):
            rows = [(e.new_rank, e.hypothesis) for e in nbest.entries]
        else:
            rows = [(h.asr_rank, h) for h in nbest.hypotheses]
        for rank, hypothesis in rows:
            stream.write(
                f"{hypothesis.utterance_id}\t{rank}\t{hypothesis.asr_score!r}\t{hypothesis.text}\n"
            )
