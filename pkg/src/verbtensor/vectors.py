"""From raw co-occurrence counts to low-dimensional noun embeddings.

The pipeline is: tTest reweighting of counts, per-noun top-N context
selection, row L2 normalization, then truncated SVD down to K dimensions.
Vector quality is sanity-checked with Spearman correlation against a
human-scored word-pair file.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy import stats

from .corpus import CooccurrenceTable, Vocabulary
from .linalg import cosine, l2_normalize_rows, truncated_svd

log = logging.getLogger(__name__)

DEFAULT_TOP_N = 200


@dataclass(frozen=True)
class WeightedVectorTable:
    """Sparse noun-by-context association weights in [-1, 1]."""

    nouns: Vocabulary
    contexts: Vocabulary
    weights: sp.csr_matrix

    def weight(self, noun: str, context: str) -> float:
        if noun not in self.nouns or context not in self.contexts:
            return 0.0
        return float(self.weights[self.nouns.position(noun), self.contexts.position(context)])


@dataclass(frozen=True)
class EmbeddingTable:
    """Dense K-dimensional embeddings for a fixed noun vocabulary."""

    nouns: Vocabulary
    dim: int
    matrix: np.ndarray  # shape (len(nouns), dim)

    def __contains__(self, noun) -> bool:
        return noun in self.nouns

    def vector(self, noun: str) -> np.ndarray:
        return self.matrix[self.nouns.position(noun)]


@dataclass(frozen=True)
class SimilarityPair:
    word_a: str
    word_b: str
    gold_score: float

    def __post_init__(self):
        if self.word_a == self.word_b:
            raise ValueError(f"similarity pair repeats the word {self.word_a!r}")


def ttest_weight(table: CooccurrenceTable) -> WeightedVectorTable:
    """Replace raw counts with tTest association weights.

    For a cell with joint probability p(w, c) and marginals p(w), p(c), all
    estimated from the table's own grand total, the weight is
    ``(p(w, c) - p(w) p(c)) / sqrt(p(w) p(c))``, which always lands in
    [-1, 1]. Cells with count zero are kept at weight zero so the table stays
    sparse; only observed contexts compete in the later ranking.
    """
    total = float(table.counts.sum())
    if total <= 0.0:
        raise ValueError("empty co-occurrence table: grand total is zero")
    row_sums = np.asarray(table.counts.sum(axis=1), dtype=np.float64).ravel()
    col_sums = np.asarray(table.counts.sum(axis=0), dtype=np.float64).ravel()
    coo = table.counts.tocoo()
    p_joint = coo.data.astype(np.float64) / total
    p_noun = row_sums[coo.row] / total
    p_ctx = col_sums[coo.col] / total
    denom = np.sqrt(p_noun * p_ctx)
    values = (p_joint - p_noun * p_ctx) / denom
    weights = sp.csr_matrix(
        (values, (coo.row, coo.col)), shape=table.counts.shape, dtype=np.float64
    )
    weights.eliminate_zeros()
    return WeightedVectorTable(table.target_nouns, table.contexts, weights)


def select_top_n(table: WeightedVectorTable, n: int) -> WeightedVectorTable:
    """Keep only each noun's N highest-weighted contexts, zeroing the rest.

    Ranking is by weight descending; equal weights break by context word,
    lexicographically ascending, so selection is deterministic.
    """
    if n < 1:
        raise ValueError(f"top-N must be at least 1, got {n}")
    src = table.weights
    words = table.contexts.words
    rows, cols, data = [], [], []
    for i in range(src.shape[0]):
        start, end = src.indptr[i], src.indptr[i + 1]
        idx = src.indices[start:end]
        vals = src.data[start:end]
        if len(idx) > n:
            order = sorted(range(len(idx)), key=lambda t: (-vals[t], words[idx[t]]))[:n]
            idx = idx[order]
            vals = vals[order]
        rows.extend([i] * len(idx))
        cols.extend(idx.tolist())
        data.extend(vals.tolist())
    out = sp.csr_matrix((data, (rows, cols)), shape=src.shape, dtype=np.float64)
    return WeightedVectorTable(table.nouns, table.contexts, out)


def drop_zero_rows(table: WeightedVectorTable):
    """Remove nouns whose weight row is entirely zero.

    Such nouns never co-occurred with anything informative; keeping them
    would produce zero embeddings and undefined cosines downstream. Returns
    the reduced table and the list of dropped nouns.
    """
    csr = table.weights.tocsr()
    nnz_per_row = np.diff(csr.indptr)
    keep = np.flatnonzero(nnz_per_row > 0)
    dropped = [table.nouns.words[i] for i in np.flatnonzero(nnz_per_row == 0)]
    if not dropped:
        return table, []
    vocab = Vocabulary.from_words(table.nouns.words[i] for i in keep)
    return WeightedVectorTable(vocab, table.contexts, csr[keep]), dropped


def reduce_to_embeddings(
    table: WeightedVectorTable,
    k: int,
    top_n: int | None = None,
    scale_by_singular_values: bool = True,
) -> EmbeddingTable:
    """Run selection, row normalization and truncated SVD to K dimensions.

    Pass ``top_n`` to apply context selection here; leave it None when the
    table has already been selected. Embeddings default to the
    singular-value-scaled rows ``U @ diag(s)``, which preserve the inner
    products of the normalized table; plain ``U`` is available for sweeps
    that only care about cosine geometry.
    """
    if top_n is not None:
        table = select_top_n(table, top_n)
    n_nouns, n_contexts = table.weights.shape
    if not 1 <= k <= min(n_nouns, n_contexts):
        raise ValueError(
            f"embedding dim k={k} out of range for a {n_nouns}x{n_contexts} table"
        )
    normalized = l2_normalize_rows(table.weights)
    svd = truncated_svd(normalized, k)
    matrix = svd.U * svd.singular_values if scale_by_singular_values else svd.U.copy()
    return EmbeddingTable(nouns=table.nouns, dim=k, matrix=np.ascontiguousarray(matrix))


def spearman_similarity_eval(embeddings: EmbeddingTable, pairs) -> float:
    """Spearman rank correlation of embedding cosines against gold scores.

    Pairs with a missing word are skipped (and logged); at least two usable
    pairs are required. Tied values receive average ranks.
    """
    sims, golds = [], []
    skipped = 0
    for pair in pairs:
        if pair.word_a in embeddings and pair.word_b in embeddings:
            sims.append(cosine(embeddings.vector(pair.word_a), embeddings.vector(pair.word_b)))
            golds.append(pair.gold_score)
        else:
            skipped += 1
    if skipped:
        log.info("similarity eval skipped %d pairs with out-of-vocabulary words", skipped)
    if len(sims) < 2:
        raise ValueError(
            f"need at least 2 usable pairs, got {len(sims)} (skipped {skipped})"
        )
    rho = stats.spearmanr(sims, golds).statistic
    if not np.isfinite(rho):
        raise ValueError("Spearman correlation undefined (constant ranking)")
    return float(rho)


def read_pairs_tsv(path) -> list:
    """Read ``word_a<TAB>word_b<TAB>score`` similarity pairs."""
    pairs = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            word_a, word_b, score = line.split("\t")
            pairs.append(SimilarityPair(word_a, word_b, float(score)))
    return pairs


def write_embeddings_tsv(path, embeddings: EmbeddingTable) -> None:
    """Export ``noun<TAB>v1<TAB>...<TAB>vK`` with full float precision."""
    with open(path, "w", encoding="utf-8") as handle:
        for i, noun in enumerate(embeddings.nouns.words):
            values = "\t".join(repr(float(v)) for v in embeddings.matrix[i])
            handle.write(f"{noun}\t{values}\n")


def read_embeddings_tsv(path) -> EmbeddingTable:
    nouns, rows = [], []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            nouns.append(parts[0])
            rows.append([float(v) for v in parts[1:]])
    if not rows:
        raise ValueError(f"no embeddings found in {path}")
    matrix = np.asarray(rows, dtype=np.float64)
    return EmbeddingTable(
        nouns=Vocabulary.from_words(nouns), dim=matrix.shape[1], matrix=matrix
    )
