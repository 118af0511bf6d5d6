"""Corpus scanning: word frequencies, sentence co-occurrence, frequency buckets.

The corpus format is deliberately dumb: UTF-8 text, one sentence per line,
whitespace-separated tokens that are already lemmatized and lowercased.
Everything linguistic (tokenization, parsing, lemmatization) happens upstream
of this package.
"""

from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class Vocabulary:
    """An ordered set of distinct words with a word -> position map."""

    words: tuple
    index: dict = field(repr=False)

    @classmethod
    def from_words(cls, words) -> "Vocabulary":
        words = tuple(words)
        index = {}
        for pos, word in enumerate(words):
            if word in index:
                raise ValueError(f"duplicate word in vocabulary: {word!r}")
            index[word] = pos
        return cls(words=words, index=index)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word) -> bool:
        return word in self.index

    def position(self, word) -> int:
        return self.index[word]


@dataclass(frozen=True)
class CooccurrenceTable:
    """Sparse noun-by-context co-occurrence counts within sentences."""

    target_nouns: Vocabulary
    contexts: Vocabulary
    counts: sp.csr_matrix  # shape (len(target_nouns), len(contexts))

    def count(self, noun: str, context: str) -> int:
        if noun not in self.target_nouns or context not in self.contexts:
            return 0
        return int(self.counts[self.target_nouns.position(noun), self.contexts.position(context)])

    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class FrequencyBuckets:
    """Partition of nouns into buckets of near-equal corpus frequency.

    Nouns are sorted by descending frequency (ties broken lexicographically)
    and chopped into consecutive runs of ``bucket_size``; the final bucket may
    be smaller.
    """

    bucket_of: dict
    members: dict  # bucket id -> tuple of nouns, in sort order
    bucket_size: int

    def __len__(self) -> int:
        return len(self.members)


def iter_corpus_lines(path):
    """Yield raw sentence lines from a corpus file."""
    with open(path, "r", encoding="utf-8") as handle:
        yield from handle


def scan_corpus(sentences, target_nouns, context_vocab: Vocabulary | None = None):
    """Count token frequencies and noun-context sentence co-occurrences.

    ``sentences`` is an iterable of whitespace-tokenized lines. Co-occurrence
    uses occurrence-pair counting: every occurrence of a target noun pairs
    with every occurrence of a context word in the same sentence, except the
    noun's own token position. A noun therefore does co-occur with *other*
    occurrences of its own lemma.

    Returns ``(frequency_counter, CooccurrenceTable)``. When ``context_vocab``
    is None the context vocabulary is every word type seen, sorted.
    """
    target_nouns = set(target_nouns)
    freq: Counter = Counter()
    pair_counts: dict = {}
    n_sentences = 0
    for line in sentences:
        tokens = line.split()
        if not tokens:
            continue
        n_sentences += 1
        token_counts = Counter(tokens)
        freq.update(token_counts)
        if not target_nouns:
            continue
        present = [t for t in token_counts if t in target_nouns]
        if not present:
            continue
        for noun in present:
            n_occ = token_counts[noun]
            for word, w_occ in token_counts.items():
                if context_vocab is not None and word not in context_vocab:
                    continue
                pairs = n_occ * w_occ
                if word == noun:
                    pairs -= n_occ  # a token never pairs with itself
                if pairs:
                    key = (noun, word)
                    pair_counts[key] = pair_counts.get(key, 0) + pairs
    if n_sentences == 0:
        raise ValueError("empty corpus: no non-blank sentences found")

    noun_vocab = Vocabulary.from_words(sorted(target_nouns))
    if context_vocab is None:
        context_vocab = Vocabulary.from_words(sorted(freq))
    rows, cols, data = [], [], []
    for (noun, word), count in pair_counts.items():
        rows.append(noun_vocab.position(noun))
        cols.append(context_vocab.position(word))
        data.append(count)
    counts = sp.csr_matrix(
        (data, (rows, cols)),
        shape=(len(noun_vocab), len(context_vocab)),
        dtype=np.int64,
    )
    counts.sum_duplicates()
    return freq, CooccurrenceTable(noun_vocab, context_vocab, counts)


def build_context_vocab(frequencies, stopwords, size: int = 10000) -> Vocabulary:
    """Pick the ``size`` most frequent non-stopword types.

    Ties at the same count break lexicographically ascending, so the result
    is deterministic for a given frequency table.
    """
    if size <= 0:
        raise ValueError(f"vocabulary size must be positive, got {size}")
    if not frequencies:
        raise ValueError("empty frequency table")
    stopwords = set(stopwords)
    ranked = sorted(
        (w for w in frequencies if w not in stopwords),
        key=lambda w: (-frequencies[w], w),
    )
    return Vocabulary.from_words(ranked[:size])


def frequency_buckets(frequencies, nouns, bucket_size: int = 10) -> FrequencyBuckets:
    """Bucket nouns into consecutive runs of ``bucket_size`` by frequency.

    Nouns missing from the frequency table count as frequency 0.
    """
    if bucket_size <= 0:
        raise ValueError(f"bucket_size must be positive, got {bucket_size}")
    ordered = sorted(set(nouns), key=lambda n: (-frequencies.get(n, 0), n))
    bucket_of = {}
    members = {}
    for bucket_id, start in enumerate(range(0, len(ordered), bucket_size)):
        chunk = tuple(ordered[start : start + bucket_size])
        members[bucket_id] = chunk
        for noun in chunk:
            bucket_of[noun] = bucket_id
    return FrequencyBuckets(bucket_of=bucket_of, members=members, bucket_size=bucket_size)


def read_stopwords(path) -> set:
    """One stopword per line; blank lines ignored."""
    with open(path, "r", encoding="utf-8") as handle:
        return {line.strip() for line in handle if line.strip()}


def write_frequency_tsv(path, frequencies) -> None:
    """Export ``word<TAB>count`` rows, most frequent first, ties lexicographic."""
    ordered = sorted(frequencies.items(), key=lambda kv: (-kv[1], kv[0]))
    with open(path, "w", encoding="utf-8") as handle:
        for word, count in ordered:
            handle.write(f"{word}\t{count}\n")


def read_frequency_tsv(path) -> Counter:
    freq: Counter = Counter()
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            word, count = line.split("\t")
            freq[word] = int(count)
    return freq


def write_buckets_tsv(path, buckets: FrequencyBuckets) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"# bucket_size\t{buckets.bucket_size}\n")
        for bucket_id in sorted(buckets.members):
            for noun in buckets.members[bucket_id]:
                handle.write(f"{noun}\t{bucket_id}\n")


def read_buckets_tsv(path) -> FrequencyBuckets:
    bucket_of = {}
    members: dict = {}
    bucket_size = None
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("# bucket_size\t"):
                bucket_size = int(line.split("\t")[1])
                continue
            noun, bucket_id = line.split("\t")
            bucket_id = int(bucket_id)
            bucket_of[noun] = bucket_id
            members.setdefault(bucket_id, []).append(noun)
    if bucket_size is None:
        raise ValueError(f"missing bucket_size header in {path}")
    return FrequencyBuckets(
        bucket_of=bucket_of,
        members={b: tuple(ns) for b, ns in members.items()},
        bucket_size=bucket_size,
    )
