from typing import Iterable, Mapping, Sequence

from kgrescore.core.errors import EmptyReference
from kgrescore.core.logging import get_logger
from kgrescore.nbest.schema import Hypothesis, NBestList, WerResult, WerSummary

logger = get_logger()


def tokenize(text: str) -> list[str]:
    """Whitespace tokens, case-folded."""
    return text.casefold().split()


def edit_table(reference: Sequence[str], hypothesis: Sequence[str]) -> list[list[int]]:
    """Unit-cost Levenshtein table over all prefixes."""
    rows, cols = len(reference) + 1, len(hypothesis) + 1
    table = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        table[i][0] = i
    for j in range(cols):
        table[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            mismatch = 0 if reference[i - 1] == hypothesis[j - 1] else 1
            table[i][j] = min(
                table[i - 1][j - 1] + mismatch,
                table[i - 1][j] + 1,
                table[i][j - 1] + 1,
            )
    return table


def word_error_rate(reference: Sequence[str], hypothesis: Sequence[str]) -> WerResult:
    """Backtrace prefers substitution (or match), then deletion, then insertion."""
    if not reference:
        raise EmptyReference("Reference must contain at least one token")

    table = edit_table(reference, hypothesis)
    substitutions = deletions = insertions = 0
    i, j = len(reference), len(hypothesis)
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            mismatch = 0 if reference[i - 1] == hypothesis[j - 1] else 1
            if table[i][j] == table[i - 1][j - 1] + mismatch:
                substitutions += mismatch
                i, j = i - 1, j - 1
                continue
        if i > 0 and table[i][j] == table[i - 1][j] + 1:
            deletions += 1
            i -= 1
        else:
            insertions += 1
            j -= 1

    return WerResult(
        substitutions=substitutions,
        deletions=deletions,
        insertions=insertions,
        reference_length=len(reference),
    )


def corpus_wer(pairs: Iterable[tuple[Sequence[str], Sequence[str]]]) -> float:
    """Total errors over total reference tokens for (reference, hypothesis) pairs."""
    errors = words = 0
    for reference, hypothesis in pairs:
        result = word_error_rate(reference, hypothesis)
        errors += result.errors
        words += result.reference_length
    return errors / words if words else 0.0


def summarize_wer(
    originals: Sequence[NBestList],
    rescored_one_best: Mapping[str, Hypothesis],
    references: Mapping[str, str],
) -> WerSummary:
    """Corpus WER (total errors over total reference words) of three selections."""
    reference_words = original_errors = rescored_errors = oracle_errors = 0
    n_utterances = 0

    for nbest in originals:
        reference_text = references.get(nbest.utterance_id)
        if reference_text is None:
            logger.warning(f"No reference for utterance '{nbest.utterance_id}'; skipped in WER")
            continue
        reference = tokenize(reference_text)
        results = {
            h.asr_rank: word_error_rate(reference, tokenize(h.text)) for h in nbest.hypotheses
        }
        best_rescored = rescored_one_best.get(nbest.utterance_id, nbest.hypotheses[0])

        n_utterances += 1
        reference_words += len(reference)
        original_errors += results[1].errors
        rescored_errors += word_error_rate(reference, tokenize(best_rescored.text)).errors
        oracle_errors += min(r.errors for r in results.values())

    denominator = max(reference_words, 1)
    summary = WerSummary(
        n_utterances=n_utterances,
        reference_words=reference_words,
        original_1best=original_errors / denominator,
        rescored_1best=rescored_errors / denominator,
        oracle=oracle_errors / denominator,
    )
    logger.info(
        f"WER over {n_utterances} utterances: original {summary.original_1best:.4f}, "
        f"rescored {summary.rescored_1best:.4f}, oracle {summary.oracle:.4f}"
    )
    return summary
