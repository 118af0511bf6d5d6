"""Verb datasets: positive triples, confounder negatives and CV splits.

Positive subject-verb-object triples come from a pre-extracted TSV. For each
positive a pseudo-negative is built by replacing both nouns with confounders
drawn at random from the same corpus-frequency bucket, which keeps the
negatives frequency-matched and the classes exactly balanced.
"""

import json
import logging
import random
from dataclasses import dataclass, field

from .corpus import FrequencyBuckets
from .util import DataError, derive_seed

log = logging.getLogger(__name__)

PLAUSIBLE = "plausible"
IMPLAUSIBLE = "implausible"

DEFAULT_POSITIVE_CAP = 2000


@dataclass(frozen=True)
class LabeledTriple:
    subject: str
    verb: str
    object: str
    label: str

    def __post_init__(self):
        if self.label not in (PLAUSIBLE, IMPLAUSIBLE):
            raise ValueError(f"bad label {self.label!r}")

    @property
    def gold_dist(self) -> tuple:
        return (1.0, 0.0) if self.label == PLAUSIBLE else (0.0, 1.0)

    @property
    def is_plausible(self) -> bool:
        return self.label == PLAUSIBLE


@dataclass
class VerbDataset:
    verb: str
    triples: list
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.triples)

    @property
    def positives(self) -> list:
        return [t for t in self.triples if t.is_plausible]

    @property
    def negatives(self) -> list:
        return [t for t in self.triples if not t.is_plausible]


@dataclass(frozen=True)
class CvSplit:
    repetition: int
    fold: int
    train: tuple
    test: tuple


def read_triples_tsv(path) -> list:
    """Read ``subject<TAB>verb<TAB>object<TAB>count`` rows."""
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 tab-separated fields")
            subject, verb, obj, count = parts
            rows.append((subject, verb, obj, int(count)))
    return rows


def load_positives(triple_file, verb: str, cap: int = DEFAULT_POSITIVE_CAP, known_nouns=None) -> list:
    """Load a verb's positive triples, filtered and frequency-capped.

    Triples whose subject or object is not in ``known_nouns`` (the embedding
    vocabulary) are dropped and logged. Survivors are ordered by descending
    corpus count, ties broken by (subject, object), and truncated to ``cap``.
    """
    if cap < 1:
        raise ValueError(f"cap must be positive, got {cap}")
    rows = [r for r in read_triples_tsv(triple_file) if r[1] == verb]
    if not rows:
        raise DataError(f"unknown verb {verb!r}: no triples in {triple_file}")
    if known_nouns is not None:
        kept = [r for r in rows if r[0] in known_nouns and r[2] in known_nouns]
        dropped = len(rows) - len(kept)
        if dropped:
            log.info("verb %r: dropped %d triples with out-of-vocabulary nouns", verb, dropped)
        rows = kept
    if not rows:
        raise DataError(f"verb {verb!r}: zero triples survive the vocabulary filter")
    rows.sort(key=lambda r: (-r[3], r[0], r[2]))
    rows = rows[:cap]
    return [LabeledTriple(s, verb, o, PLAUSIBLE) for s, _, o, _ in rows]


def _draw_confounder(noun: str, buckets: FrequencyBuckets, rng: random.Random) -> str:
    """Random bucket-mate of ``noun``, excluding the noun itself.

    When the noun's bucket offers no alternative, the search widens to the
    nearest buckets by rank distance, lower bucket id first.
    """
    if noun not in buckets.bucket_of:
        raise DataError(f"noun {noun!r} has no frequency bucket")
    home = buckets.bucket_of[noun]
    max_id = max(buckets.members)
    for dist in range(0, max_id + 1):
        candidates_ids = [home] if dist == 0 else [home - dist, home + dist]
        for bucket_id in candidates_ids:
            members = buckets.members.get(bucket_id)
            if not members:
                continue
            options = [m for m in members if m != noun]
            if options:
                return rng.choice(options)
    raise DataError(f"no confounder available for {noun!r}: noun universe too small")


def gen_confounders(positives, buckets: FrequencyBuckets, rng_seed: int) -> list:
    """One implausible triple per positive, both nouns confounded."""
    rng = random.Random(rng_seed)
    negatives = []
    for triple in positives:
        subject = _draw_confounder(triple.subject, buckets, rng)
        obj = _draw_confounder(triple.object, buckets, rng)
        negatives.append(LabeledTriple(subject, triple.verb, obj, IMPLAUSIBLE))
    return negatives


def build_dataset(verb, positives, buckets, rng_seed, metadata=None) -> VerbDataset:
    negatives = gen_confounders(positives, buckets, rng_seed)
    return VerbDataset(verb=verb, triples=list(positives) + negatives, metadata=metadata or {})


def _stratified_indices(triples):
    pos = [i for i, t in enumerate(triples) if t.is_plausible]
    neg = [i for i, t in enumerate(triples) if not t.is_plausible]
    return pos, neg


def make_5x2cv_splits(dataset, seed: int) -> list:
    """Ten (repetition, fold) splits: five stratified shuffled halvings.

    Within a repetition the two folds are mirror images: fold 1 trains on
    half A and tests on half B, fold 2 swaps them.
    """
    triples = dataset.triples if isinstance(dataset, VerbDataset) else list(dataset)
    pos, neg = _stratified_indices(triples)
    if len(triples) < 4 or len(pos) < 2 or len(neg) < 2:
        raise DataError(
            f"dataset too small to stratify: {len(pos)} positive, {len(neg)} negative"
        )
    splits = []
    for rep in range(1, 6):
        rng = random.Random(derive_seed(seed, "5x2cv", rep))
        pos_shuffled = pos[:]
        neg_shuffled = neg[:]
        rng.shuffle(pos_shuffled)
        rng.shuffle(neg_shuffled)
        half_a = sorted(pos_shuffled[: len(pos) // 2] + neg_shuffled[: len(neg) // 2])
        half_b = sorted(pos_shuffled[len(pos) // 2 :] + neg_shuffled[len(neg) // 2 :])
        splits.append(CvSplit(repetition=rep, fold=1, train=tuple(half_a), test=tuple(half_b)))
        splits.append(CvSplit(repetition=rep, fold=2, train=tuple(half_b), test=tuple(half_a)))
    return splits


def subsample(dataset: VerbDataset, n: int, seed: int) -> VerbDataset:
    """Stratified sample of ``n`` triples without replacement.

    Classes split n evenly; when n is odd the plausible class receives the
    extra example. Original triple order is preserved.
    """
    if n > len(dataset):
        raise DataError(f"cannot sample {n} triples from a dataset of {len(dataset)}")
    if n < 2:
        raise DataError(f"sample size must be at least 2, got {n}")
    pos, neg = _stratified_indices(dataset.triples)
    n_pos = n // 2 + (n % 2)
    n_neg = n // 2
    if n_pos > len(pos) or n_neg > len(neg):
        raise DataError(
            f"cannot draw {n_pos} positive / {n_neg} negative from "
            f"{len(pos)} / {len(neg)} available"
        )
    rng = random.Random(derive_seed(seed, "subsample", n))
    chosen = sorted(rng.sample(pos, n_pos) + rng.sample(neg, n_neg))
    return VerbDataset(
        verb=dataset.verb,
        triples=[dataset.triples[i] for i in chosen],
        metadata=dict(dataset.metadata),
    )


def write_dataset_jsonl(path, dataset: VerbDataset) -> None:
    """One triple per line, with label and gold distribution."""
    with open(path, "w", encoding="utf-8") as handle:
        header = {"verb": dataset.verb, "metadata": dataset.metadata}
        handle.write(json.dumps(header, sort_keys=True) + "\n")
        for t in dataset.triples:
            record = {
                "subject": t.subject,
                "verb": t.verb,
                "object": t.object,
                "label": t.label,
                "gold_dist": list(t.gold_dist),
            }
            handle.write(json.dumps(record, sort_keys=True) + "\n")


def read_dataset_jsonl(path) -> VerbDataset:
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line for line in handle if line.strip()]
    if not lines:
        raise DataError(f"empty dataset file {path}")
    header = json.loads(lines[0])
    triples = []
    for line in lines[1:]:
        record = json.loads(line)
        triple = LabeledTriple(
            record["subject"], record["verb"], record["object"], record["label"]
        )
        if tuple(record["gold_dist"]) != triple.gold_dist:
            raise DataError(f"inconsistent gold_dist for {record}")
        triples.append(triple)
    return VerbDataset(verb=header["verb"], triples=triples, metadata=header.get("metadata", {}))


def write_splits_jsonl(path, splits) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for s in splits:
            record = {
                "repetition": s.repetition,
                "fold": s.fold,
                "train": list(s.train),
                "test": list(s.test),
            }
            handle.write(json.dumps(record, sort_keys=True) + "\n")
