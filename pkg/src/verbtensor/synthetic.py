"""Synthetic corpora and datasets with planted selectional preferences.

Two flavors:

* :func:`planted_dataset` builds embeddings directly (no corpus) with subject
  and object noun clusters, for fast unit tests of the learners;
* :class:`WorldConfig` / :func:`write_fixture` generate a full desk-scale
  world: a lemmatized corpus whose nouns carry class-specific context words,
  a triples file whose verbs prefer certain subject and object classes, a
  stopword list, similarity dev pairs and a ready-to-run pipeline config.

Noun frequencies decrease with a global rank that round-robins across the
classes, so any run of adjacent ranks (a frequency bucket) mixes classes and
bucket-sampled confounders usually break the planted preference.
"""

import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Vocabulary
from .data import IMPLAUSIBLE, PLAUSIBLE, LabeledTriple, VerbDataset
from .util import derive_seed, ensure_dir
from .vectors import EmbeddingTable

DEFAULT_STOPWORDS = ("the", "a", "of", "and", "to", "in")


@dataclass(frozen=True)
class WorldConfig:
    classes: tuple = ("person", "creature", "food", "machine", "place")
    nouns_per_class: int = 40
    contexts_per_class: int = 25
    shared_contexts: int = 50
    class_context_share: float = 0.65
    context_tokens_per_sentence: int = 8
    stopword_tokens_per_sentence: int = 3
    max_noun_frequency: int = 80
    rank_step: int = 4
    min_noun_frequency: int = 10
    positives_per_verb: int = 400
    # verb -> (allowed subject classes, allowed object classes)
    verb_preferences: dict = field(
        default_factory=lambda: {
            "devour": (("person", "creature"), ("food",)),
            "assemble": (("person",), ("machine",)),
        }
    )
    verb_concreteness: dict = field(
        default_factory=lambda: {"devour": 4.4, "assemble": 3.1}
    )
    seed: int = 7


@dataclass(frozen=True)
class SyntheticWorld:
    config: WorldConfig
    nouns_by_class: dict
    class_of: dict
    noun_frequency: dict
    class_contexts: dict
    shared_context_words: tuple


def build_world(config: WorldConfig = WorldConfig()) -> SyntheticWorld:
    nouns_by_class = {
        cls: tuple(f"{cls}{i:02d}" for i in range(config.nouns_per_class))
        for cls in config.classes
    }
    class_of = {n: cls for cls, nouns in nouns_by_class.items() for n in nouns}
    class_contexts = {
        cls: tuple(f"{cls}_ctx{j:02d}" for j in range(config.contexts_per_class))
        for cls in config.classes
    }
    shared = tuple(f"filler{j:02d}" for j in range(config.shared_contexts))
    frequency = {}
    n_classes = len(config.classes)
    for rank in range(n_classes * config.nouns_per_class):
        cls = config.classes[rank % n_classes]
        noun = nouns_by_class[cls][rank // n_classes]
        frequency[noun] = max(
            config.min_noun_frequency, config.max_noun_frequency - rank // config.rank_step
        )
    return SyntheticWorld(
        config=config,
        nouns_by_class=nouns_by_class,
        class_of=class_of,
        noun_frequency=frequency,
        class_contexts=class_contexts,
        shared_context_words=shared,
    )


def generate_sentences(world: SyntheticWorld) -> list:
    """One sentence per planned noun occurrence, class-flavored contexts."""
    config = world.config
    rng = random.Random(derive_seed(config.seed, "corpus"))
    sentences = []
    for cls in config.classes:
        for noun in world.nouns_by_class[cls]:
            class_words = world.class_contexts[cls]
            for _ in range(world.noun_frequency[noun]):
                tokens = [noun]
                for _ in range(config.context_tokens_per_sentence):
                    if rng.random() < config.class_context_share:
                        tokens.append(rng.choice(class_words))
                    else:
                        tokens.append(rng.choice(world.shared_context_words))
                for _ in range(config.stopword_tokens_per_sentence):
                    tokens.append(rng.choice(DEFAULT_STOPWORDS))
                rng.shuffle(tokens)
                sentences.append(" ".join(tokens))
    rng.shuffle(sentences)
    return sentences


def generate_triples(world: SyntheticWorld) -> list:
    """Positive (subject, verb, object, count) rows for every planted verb."""
    config = world.config
    rows = []
    for verb in sorted(config.verb_preferences):
        subj_classes, obj_classes = config.verb_preferences[verb]
        subjects = [n for cls in subj_classes for n in world.nouns_by_class[cls]]
        objects_ = [n for cls in obj_classes for n in world.nouns_by_class[cls]]
        rng = random.Random(derive_seed(config.seed, "triples", verb))
        space = len(subjects) * len(objects_)
        n_pairs = min(config.positives_per_verb, space)
        picks = rng.sample(range(space), n_pairs)
        for j, flat in enumerate(picks):
            subject = subjects[flat // len(objects_)]
            obj = objects_[flat % len(objects_)]
            count = max(1, int(2000.0 / (j + 2)))
            rows.append((subject, verb, obj, count))
    return rows


def generate_dev_pairs(world: SyntheticWorld, n_pairs: int = 60) -> list:
    """Word pairs whose gold similarity reflects shared class membership."""
    config = world.config
    rng = random.Random(derive_seed(config.seed, "dev-pairs"))
    frequent = sorted(
        world.class_of, key=lambda n: (-world.noun_frequency[n], n)
    )[: max(40, n_pairs)]
    pairs = []
    attempts = 0
    while len(pairs) < n_pairs and attempts < 50 * n_pairs:
        attempts += 1
        a, b = rng.sample(frequent, 2)
        same = world.class_of[a] == world.class_of[b]
        if same:
            gold = 0.7 + 0.3 * rng.random()
        else:
            gold = 0.3 * rng.random()
        want_same = len(pairs) % 2 == 0
        if same != want_same:
            continue
        pairs.append((a, b, round(gold, 4)))
    return pairs


def planted_embeddings(k: int = 5, per_cluster: int = 30, noise: float = 0.35, seed: int = 0):
    """Embeddings for four noun clusters around +-e1 (subjects) and +-e2 (objects)."""
    if k < 2:
        raise ValueError("planted embeddings need k >= 2")
    rng = np.random.default_rng(derive_seed(seed, "planted-emb"))
    names = []
    rows = []
    centers = {
        "sp": np.eye(k)[0],
        "sn": -np.eye(k)[0],
        "op": np.eye(k)[1],
        "on": -np.eye(k)[1],
    }
    for prefix in ("sp", "sn", "op", "on"):
        for i in range(per_cluster):
            names.append(f"{prefix}{i:03d}")
            rows.append(centers[prefix] + noise * rng.standard_normal(k))
    matrix = np.asarray(rows)
    return EmbeddingTable(nouns=Vocabulary.from_words(names), dim=k, matrix=matrix)


def planted_dataset(
    k: int = 5,
    n_triples: int = 200,
    noise: float = 0.35,
    seed: int = 0,
    verb: str = "vex",
):
    """Separable synthetic dataset plus matching embeddings.

    Positives pair a +subject-cluster noun with a +object-cluster noun;
    negatives flip exactly one of the two clusters, which makes the task
    bilinear-separable and solvable by both learners when noise is modest.
    """
    per_cluster = max(10, n_triples // 4)
    embeddings = planted_embeddings(k=k, per_cluster=per_cluster, noise=noise, seed=seed)
    rng = random.Random(derive_seed(seed, "planted-data"))
    sp = [w for w in embeddings.nouns.words if w.startswith("sp")]
    sn = [w for w in embeddings.nouns.words if w.startswith("sn")]
    op = [w for w in embeddings.nouns.words if w.startswith("op")]
    on = [w for w in embeddings.nouns.words if w.startswith("on")]
    n_pos = n_triples // 2
    n_neg = n_triples - n_pos
    triples = []
    for _ in range(n_pos):
        triples.append(LabeledTriple(rng.choice(sp), verb, rng.choice(op), PLAUSIBLE))
    for i in range(n_neg):
        if i % 2 == 0:
            triples.append(LabeledTriple(rng.choice(sn), verb, rng.choice(op), IMPLAUSIBLE))
        else:
            triples.append(LabeledTriple(rng.choice(sp), verb, rng.choice(on), IMPLAUSIBLE))
    dataset = VerbDataset(verb=verb, triples=triples, metadata={"planted": True})
    return dataset, embeddings


def write_fixture(directory, config: WorldConfig = WorldConfig(), pipeline_overrides=None) -> Path:
    """Write a complete input directory plus pipeline config, return its path.

    Files: ``corpus.txt``, ``stopwords.txt``, ``triples.tsv``,
    ``dev_pairs.tsv`` and ``config.ini`` (paths inside are relative to the
    directory). ``pipeline_overrides`` maps ``section.key`` strings to values
    that replace the defaults in the written config.
    """
    directory = ensure_dir(directory)
    world = build_world(config)

    with open(directory / "corpus.txt", "w", encoding="utf-8") as handle:
        for sentence in generate_sentences(world):
            handle.write(sentence + "\n")
    with open(directory / "stopwords.txt", "w", encoding="utf-8") as handle:
        for word in DEFAULT_STOPWORDS:
            handle.write(word + "\n")
    with open(directory / "triples.tsv", "w", encoding="utf-8") as handle:
        for subject, verb, obj, count in generate_triples(world):
            handle.write(f"{subject}\t{verb}\t{obj}\t{count}\n")
    with open(directory / "dev_pairs.tsv", "w", encoding="utf-8") as handle:
        for a, b, gold in generate_dev_pairs(world):
            handle.write(f"{a}\t{b}\t{gold}\n")

    settings = {
        "paths.corpus": "corpus.txt",
        "paths.stopwords": "stopwords.txt",
        "paths.triples": "triples.tsv",
        "paths.dev_pairs": "dev_pairs.tsv",
        "paths.output_dir": "out",
        "vectors.context_vocab_size": 10000,
        "vectors.top_n": "",
        "vectors.top_n_sweep": "25,50,100,200",
        "vectors.svd_dims": "20,40",
        "vectors.scale_by_singular_values": "true",
        "training.learning_rate": 0.05,
        "training.adagrad_epsilon": 1e-8,
        "training.l2_lambda": 1e-4,
        "training.epochs": 100,
        "training.init_scale": 0.01,
        "training.seed": 13,
        "training.update_mode": "stochastic",
        "training.regularize_theta": "true",
        "experiment.positive_cap": 2000,
        "experiment.bucket_size": 10,
        "experiment.cv_seed": 17,
        "experiment.data_seed": 23,
        "experiment.curve_sizes": "10,25,50,100",
        "experiment.curve_repeats": 5,
        "experiment.curve_verbs": "",
        "experiment.small_cv_size": 52,
    }
    settings.update(pipeline_overrides or {})

    sections: dict = {}
    for dotted, value in settings.items():
        section, key = dotted.split(".", 1)
        sections.setdefault(section, {})[key] = value
    lines = []
    for section in ("paths", "vectors", "training", "experiment"):
        lines.append(f"[{section}]")
        for key, value in sections.get(section, {}).items():
            lines.append(f"{key} = {value}")
        lines.append("")
    lines.append("[verbs]")
    for verb in sorted(config.verb_preferences):
        lines.append(f"{verb} = {config.verb_concreteness.get(verb, 0.0)}")
    lines.append("")
    with open(directory / "config.ini", "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines))
    return directory / "config.ini"


def small_world_config(seed: int = 7) -> WorldConfig:
    """A miniature world for fast end-to-end tests."""
    return WorldConfig(
        nouns_per_class=12,
        contexts_per_class=12,
        shared_contexts=20,
        context_tokens_per_sentence=7,
        max_noun_frequency=34,
        rank_step=2,
        min_noun_frequency=8,
        positives_per_verb=60,
        seed=seed,
    )
