"""Pipeline commands behind the CLI: vectors, datasets, experiments, models.

Every command writes its artifacts plus a ``manifest.json`` recording the
parameters it used and sha256 checksums of the inputs it read and the outputs
it wrote. Commands are pure functions of (config, input files, seeds), so
re-running one without changing inputs reproduces its outputs byte for byte.
"""

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import corpus as corpus_mod
from . import data as data_mod
from . import evaluation as eval_mod
from . import tensor_model as tm
from . import vectors as vec_mod
from .config import PipelineConfig, require_input_files
from .linalg import write_tvb
from .util import (
    DataError,
    ValidationError,
    VerbTensorError,
    derive_seed,
    ensure_dir,
    sha256_file,
)

log = logging.getLogger(__name__)

SD_NOTE = "# sd columns are sample standard deviations (ddof=1)"


def _write_manifest(directory: Path, command: str, parameters: dict, inputs, outputs) -> Path:
    manifest = {
        "command": command,
        "parameters": parameters,
        "inputs": {str(p): sha256_file(p) for p in sorted(inputs, key=str)},
        "outputs": {str(p): sha256_file(p) for p in sorted(outputs, key=str)},
    }
    path = directory / f"manifest_{command}.json" if command.startswith("experiment") else directory / "manifest.json"
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path


def _fmt(value: float) -> str:
    return f"{value:.6f}"


# ---------------------------------------------------------------------------
# build-vectors
# ---------------------------------------------------------------------------

def build_vectors(config: PipelineConfig) -> dict:
    """Corpus scan, tTest weighting, context selection, SVD, embedding export."""
    require_input_files(config, "corpus", "stopwords", "triples", "dev_pairs")
    out_dir = ensure_dir(config.vectors_dir())
    stopwords = corpus_mod.read_stopwords(config.stopwords)
    triple_rows = data_mod.read_triples_tsv(config.triples)
    targets = sorted({r[0] for r in triple_rows} | {r[2] for r in triple_rows})
    if not targets:
        raise ValidationError(f"no triples found in {config.triples}")

    log.info("scanning corpus for frequencies: %s", config.corpus)
    frequencies, _ = corpus_mod.scan_corpus(
        corpus_mod.iter_corpus_lines(config.corpus), target_nouns=set()
    )
    vocab = corpus_mod.build_context_vocab(frequencies, stopwords, config.context_vocab_size)
    log.info("context vocabulary: %d words", len(vocab))

    log.info("scanning corpus for co-occurrences of %d target nouns", len(targets))
    _, cooc = corpus_mod.scan_corpus(
        corpus_mod.iter_corpus_lines(config.corpus), set(targets), vocab
    )
    weighted = vec_mod.ttest_weight(cooc)
    weighted, dropped = vec_mod.drop_zero_rows(weighted)
    if dropped:
        log.info("dropped %d nouns with no informative co-occurrences", len(dropped))

    top_n, sweep_trace = _choose_top_n(config, weighted)
    selected = vec_mod.select_top_n(weighted, top_n)

    outputs = []
    freq_path = out_dir / "frequencies.tsv"
    corpus_mod.write_frequency_tsv(freq_path, frequencies)
    outputs.append(freq_path)

    max_k = min(selected.weights.shape)
    for k in config.svd_dims:
        if k > max_k:
            raise ValidationError(
                f"svd dim {k} exceeds the {selected.weights.shape} weighted table"
            )
        emb = vec_mod.reduce_to_embeddings(
            selected, k, scale_by_singular_values=config.scale_by_singular_values
        )
        tsv_path = out_dir / f"embeddings_k{k}.tsv"
        vec_mod.write_embeddings_tsv(tsv_path, emb)
        bin_path = out_dir / f"embeddings_k{k}.tvb"
        write_tvb(bin_path, emb.matrix)
        outputs.extend([tsv_path, bin_path])
        log.info("wrote %d x %d embeddings to %s", emb.matrix.shape[0], k, tsv_path)

    inputs = [config.corpus, config.stopwords, config.triples]
    if config.dev_pairs is not None:
        inputs.append(config.dev_pairs)
    parameters = {
        "context_vocab_size": config.context_vocab_size,
        "top_n": top_n,
        "top_n_source": "config" if config.top_n else ("sweep" if sweep_trace else "default"),
        "top_n_sweep": sweep_trace,
        "svd_dims": list(config.svd_dims),
        "scale_by_singular_values": config.scale_by_singular_values,
        "dropped_nouns": dropped,
        "n_target_nouns": len(targets),
    }
    manifest = _write_manifest(out_dir, "build-vectors", parameters, inputs, outputs)
    return {"top_n": top_n, "outputs": [str(p) for p in outputs], "manifest": str(manifest)}


def _choose_top_n(config: PipelineConfig, weighted):
    """Explicit config value, else a dev-pair sweep, else the fixed default."""
    if config.top_n is not None:
        return config.top_n, []
    if config.dev_pairs is None:
        return vec_mod.DEFAULT_TOP_N, []
    pairs = vec_mod.read_pairs_tsv(config.dev_pairs)
    k = min(config.primary_k, min(weighted.weights.shape))
    trace = []
    best = None
    for candidate in config.top_n_sweep:
        emb = vec_mod.reduce_to_embeddings(
            weighted, k, top_n=candidate,
            scale_by_singular_values=config.scale_by_singular_values,
        )
        try:
            rho = vec_mod.spearman_similarity_eval(emb, pairs)
        except ValueError:
            continue
        trace.append({"top_n": candidate, "spearman": rho})
        if best is None or rho > best[1]:
            best = (candidate, rho)
    if best is None:
        log.warning("top-N sweep produced no usable evaluation; using default %d",
                    vec_mod.DEFAULT_TOP_N)
        return vec_mod.DEFAULT_TOP_N, trace
    log.info("top-N sweep selected N=%d (spearman %.4f)", best[0], best[1])
    return best[0], trace


# ---------------------------------------------------------------------------
# gen-data
# ---------------------------------------------------------------------------

def gen_data(config: PipelineConfig) -> dict:
    """Per-verb datasets: capped positives plus bucket-confounded negatives."""
    require_input_files(config, "triples")
    vectors_dir = config.vectors_dir()
    freq_path = vectors_dir / "frequencies.tsv"
    emb_path = vectors_dir / f"embeddings_k{config.primary_k}.tsv"
    if not freq_path.is_file() or not emb_path.is_file():
        raise ValidationError(
            f"vectors not built yet: expected {freq_path} and {emb_path} (run build-vectors)"
        )
    out_dir = ensure_dir(config.datasets_dir())
    frequencies = corpus_mod.read_frequency_tsv(freq_path)
    embeddings = vec_mod.read_embeddings_tsv(emb_path)
    known = set(embeddings.nouns.words)
    buckets = corpus_mod.frequency_buckets(frequencies, known, config.bucket_size)
    buckets_path = out_dir / "buckets.tsv"
    corpus_mod.write_buckets_tsv(buckets_path, buckets)

    outputs = [buckets_path]
    written = []
    failures = {}
    for verb in sorted(config.verbs):
        try:
            positives = data_mod.load_positives(
                config.triples, verb, cap=config.positive_cap, known_nouns=known
            )
            dataset = data_mod.build_dataset(
                verb,
                positives,
                buckets,
                derive_seed(config.data_seed, "confounders", verb),
                metadata={
                    "concreteness": config.verbs[verb],
                    "corpus_frequency": int(frequencies.get(verb, 0)),
                },
            )
        except DataError as exc:
            log.warning("verb %r skipped: %s", verb, exc)
            failures[verb] = str(exc)
            continue
        path = out_dir / f"{verb}.jsonl"
        data_mod.write_dataset_jsonl(path, dataset)
        outputs.append(path)
        written.append(verb)
        log.info(
            "verb %r: %d positives, %d negatives", verb,
            len(dataset.positives), len(dataset.negatives),
        )
    if not written:
        raise VerbTensorError(f"no verb produced a dataset: {failures}")

    parameters = {
        "positive_cap": config.positive_cap,
        "bucket_size": config.bucket_size,
        "data_seed": config.data_seed,
        "verbs_written": written,
        "verbs_skipped": failures,
    }
    manifest = _write_manifest(
        out_dir, "gen-data", parameters, [config.triples, freq_path, emb_path], outputs
    )
    return {"verbs": written, "skipped": failures, "manifest": str(manifest)}


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------

EXPERIMENT_KINDS = ("full-cv", "small-cv", "curves")


def experiment(config: PipelineConfig, which: str, jobs: int = 1) -> dict:
    """Run one of the three experiment protocols and write report CSVs."""
    if which not in EXPERIMENT_KINDS:
        raise ValidationError(f"unknown experiment {which!r}, expected one of {EXPERIMENT_KINDS}")
    datasets_dir = config.datasets_dir()
    verb_paths = {v: datasets_dir / f"{v}.jsonl" for v in sorted(config.verbs)}
    available = [v for v, p in verb_paths.items() if p.is_file()]
    if not available:
        raise ValidationError(f"no datasets under {datasets_dir} (run gen-data)")
    emb_paths = {k: config.vectors_dir() / f"embeddings_k{k}.tsv" for k in config.svd_dims}
    for k, path in emb_paths.items():
        if not path.is_file():
            raise ValidationError(f"missing embeddings for k={k}: {path}")

    out_dir = ensure_dir(config.reports_dir())
    results = []
    failures = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = list(pool.map(_experiment_verb_safe,
                                    [(config, verb, which) for verb in available]))
        for verb, payload, error in futures:
            if error is not None:
                failures[verb] = error
            else:
                results.append(payload)
    else:
        for verb in available:
            verb, payload, error = _experiment_verb_safe((config, verb, which))
            if error is not None:
                failures[verb] = error
            else:
                results.append(payload)
    for verb, error in failures.items():
        log.error("verb %r failed: %s", verb, error)
    if not results:
        raise VerbTensorError(f"every verb failed: {failures}")

    outputs = _write_reports(config, which, results, out_dir)
    inputs = [verb_paths[v] for v in available] + [emb_paths[k] for k in config.svd_dims]
    parameters = {
        "which": which,
        "svd_dims": list(config.svd_dims),
        "cv_seed": config.cv_seed,
        "small_cv_size": config.small_cv_size if which == "small-cv" else None,
        "curve_sizes": list(config.curve_sizes) if which == "curves" else None,
        "curve_repeats": config.curve_repeats if which == "curves" else None,
        "train": {
            "learning_rate": config.train.learning_rate,
            "adagrad_epsilon": config.train.adagrad_epsilon,
            "l2_lambda": config.train.l2_lambda,
            "epochs": config.train.epochs,
            "init_scale": config.train.init_scale,
            "seed": config.train.seed,
            "update_mode": config.train.update_mode,
            "regularize_theta": config.train.regularize_theta,
        },
        "verbs": sorted(r["verb"] for r in results),
        "failed_verbs": failures,
    }
    manifest = _write_manifest(out_dir, f"experiment-{which}", parameters, inputs, outputs)
    if failures:
        raise VerbTensorError(
            f"{len(failures)} verb(s) failed: {sorted(failures)} (reports written for the rest)"
        )
    return {
        "which": which,
        "verbs": [r["verb"] for r in results],
        "outputs": [str(p) for p in outputs],
        "manifest": str(manifest),
    }


def _experiment_verb_safe(args):
    config, verb, which = args
    try:
        return verb, _experiment_verb(config, verb, which), None
    except Exception as exc:  # isolate per-verb failures
        return verb, None, f"{type(exc).__name__}: {exc}"


def _experiment_verb(config: PipelineConfig, verb: str, which: str) -> dict:
    dataset = data_mod.read_dataset_jsonl(config.datasets_dir() / f"{verb}.jsonl")
    embeddings = {
        k: vec_mod.read_embeddings_tsv(config.vectors_dir() / f"embeddings_k{k}.tsv")
        for k in config.svd_dims
    }
    payload = {"verb": verb, "rows": [], "comparisons": [], "curve_rows": [], "splits": None}

    if which == "curves":
        k = config.primary_k
        sizes = list(config.curve_sizes)
        for method in (eval_mod.METHOD_BASELINE, eval_mod.METHOD_TENSOR):
            points = eval_mod.learning_curve(
                method,
                dataset,
                sizes,
                embeddings[k],
                config.train,
                derive_seed(config.cv_seed, "curves", verb),
                repeats=config.curve_repeats,
            )
            for point in points:
                payload["curve_rows"].append(
                    {
                        "verb": verb,
                        "method": method,
                        "k": k,
                        "size": point.size,
                        "mean_auc": point.mean_auc,
                        "sd_auc": point.sd_auc,
                    }
                )
        return payload

    base = dataset
    if which == "small-cv":
        base = data_mod.subsample(
            dataset, config.small_cv_size, derive_seed(config.cv_seed, "small", verb)
        )
    splits = data_mod.make_5x2cv_splits(base, derive_seed(config.cv_seed, which, verb))
    payload["splits"] = splits
    for k in config.svd_dims:
        per_method = {}
        for method in (eval_mod.METHOD_BASELINE, eval_mod.METHOD_TENSOR):
            folds = eval_mod.evaluate_on_splits(
                method, base, splits, embeddings[k], config.train,
                derive_seed(config.cv_seed, which, verb, k),
            )
            per_method[method] = folds
            summary = eval_mod.summarize(folds)
            for metric, mean, sd in (
                ("auc", summary.mean_auc, summary.sd_auc),
                ("f1", summary.mean_f1, summary.sd_f1),
            ):
                payload["rows"].append(
                    {
                        "verb": verb,
                        "method": method,
                        "k": k,
                        "metric": metric,
                        "mean": mean,
                        "sd": sd,
                        "folds": eval_mod.fold_metric_vector(folds, metric),
                    }
                )
        for metric in ("auc", "f1"):
            verdict = eval_mod.f_test_5x2cv(
                eval_mod.fold_metric_vector(per_method[eval_mod.METHOD_TENSOR], metric),
                eval_mod.fold_metric_vector(per_method[eval_mod.METHOD_BASELINE], metric),
            )
            payload["comparisons"].append(
                {
                    "verb": verb,
                    "k": k,
                    "metric": metric,
                    "f_statistic": verdict.f_statistic,
                    "significant": verdict.significant,
                    "alpha": verdict.alpha,
                }
            )
    return payload


def _write_reports(config: PipelineConfig, which: str, results, out_dir: Path):
    outputs = []
    results = sorted(results, key=lambda r: r["verb"])
    stem = which.replace("-", "_")
    if which == "curves":
        path = out_dir / "curves.csv"
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(SD_NOTE + "\n")
            writer = csv.writer(handle)
            writer.writerow(["verb", "method", "k", "size", "mean_auc", "sd_auc"])
            for result in results:
                for row in result["curve_rows"]:
                    writer.writerow(
                        [row["verb"], row["method"], row["k"], row["size"],
                         _fmt(row["mean_auc"]), _fmt(row["sd_auc"])]
                    )
        outputs.append(path)
        return outputs

    fold_headers = [f"r{rep}f{fold}" for rep in range(1, 6) for fold in (1, 2)]
    path = out_dir / f"{stem}.csv"
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(SD_NOTE + "\n")
        writer = csv.writer(handle)
        writer.writerow(["verb", "method", "k", "metric", "mean", "sd"] + fold_headers)
        for result in results:
            for row in result["rows"]:
                writer.writerow(
                    [row["verb"], row["method"], row["k"], row["metric"],
                     _fmt(row["mean"]), _fmt(row["sd"])]
                    + [_fmt(v) for v in row["folds"]]
                )
    outputs.append(path)

    comp_path = out_dir / f"{stem}_comparisons.csv"
    with open(comp_path, "w", encoding="utf-8", newline="") as handle:
        handle.write("# f_statistic compares tensor minus baseline on aligned folds\n")
        writer = csv.writer(handle)
        writer.writerow(["verb", "k", "metric", "f_statistic", "significant", "alpha"])
        for result in results:
            for row in result["comparisons"]:
                writer.writerow(
                    [row["verb"], row["k"], row["metric"],
                     "inf" if row["f_statistic"] == float("inf") else _fmt(row["f_statistic"]),
                     str(row["significant"]).lower(), row["alpha"]]
                )
    outputs.append(comp_path)

    for result in results:
        if result["splits"] is not None:
            split_path = out_dir / f"{stem}_splits_{result['verb']}.jsonl"
            data_mod.write_splits_jsonl(split_path, result["splits"])
            outputs.append(split_path)
    return outputs


# ---------------------------------------------------------------------------
# train / predict / eval-vectors
# ---------------------------------------------------------------------------

def train_verb(config: PipelineConfig, verb: str, k: int | None = None) -> dict:
    """Train one verb's tensor model on its full dataset and save it."""
    if verb not in config.verbs:
        raise ValidationError(f"verb {verb!r} is not in the config [verbs] section")
    k = k or config.primary_k
    if k not in config.svd_dims:
        raise ValidationError(f"k={k} is not one of the configured svd_dims {config.svd_dims}")
    dataset_path = config.datasets_dir() / f"{verb}.jsonl"
    emb_path = config.vectors_dir() / f"embeddings_k{k}.tsv"
    if not dataset_path.is_file():
        raise ValidationError(f"missing dataset {dataset_path} (run gen-data)")
    if not emb_path.is_file():
        raise ValidationError(f"missing embeddings {emb_path} (run build-vectors)")
    dataset = data_mod.read_dataset_jsonl(dataset_path)
    embeddings = vec_mod.read_embeddings_tsv(emb_path)
    result = tm.train(dataset, embeddings, config.train)
    out_dir = ensure_dir(config.models_dir())
    base = out_dir / f"{verb}_k{k}"
    tm.save_model(base, result.model, config.train, result.objective_trace)
    outputs = [Path(str(base) + ".tvbm"), Path(str(base) + ".meta")]
    parameters = {"verb": verb, "k": k, "seed": config.train.seed,
                  "epochs": config.train.epochs}
    manifest = _write_manifest(out_dir, "train", parameters,
                               [dataset_path, emb_path], outputs)
    return {
        "verb": verb,
        "k": k,
        "initial_objective": result.objective_trace[0],
        "final_objective": result.objective_trace[-1],
        "model": str(base) + ".tvbm",
        "manifest": str(manifest),
    }


def predict_one(config: PipelineConfig, verb: str, subject: str, obj: str, k: int | None = None) -> dict:
    """Load a trained model and classify one subject-object pair."""
    k = k or config.primary_k
    base = config.models_dir() / f"{verb}_k{k}"
    if not Path(str(base) + ".tvbm").is_file():
        raise ValidationError(f"no trained model at {base}.tvbm (run train --verb {verb})")
    emb_path = config.vectors_dir() / f"embeddings_k{k}.tsv"
    if not emb_path.is_file():
        raise ValidationError(f"missing embeddings {emb_path}")
    embeddings = vec_mod.read_embeddings_tsv(emb_path)
    for noun, role in ((subject, "subject"), (obj, "object")):
        if noun not in embeddings:
            raise ValidationError(f"{role} {noun!r} has no embedding")
    model = tm.load_model(base)
    label, p_plausible = tm.predict(
        model, embeddings.vector(subject), embeddings.vector(obj)
    )
    return {
        "verb": verb,
        "subject": subject,
        "object": obj,
        "label": label,
        "p_plausible": p_plausible,
        "k": k,
    }


def eval_vectors(config: PipelineConfig, pairs_path=None, k: int | None = None) -> dict:
    """Spearman correlation of embedding cosines against a word-pair file."""
    k = k or config.primary_k
    pairs_path = Path(pairs_path) if pairs_path else config.dev_pairs
    if pairs_path is None:
        raise ValidationError("no pairs file given and no dev_pairs in the config")
    if not Path(pairs_path).is_file():
        raise ValidationError(f"pairs file not found: {pairs_path}")
    emb_path = config.vectors_dir() / f"embeddings_k{k}.tsv"
    if not emb_path.is_file():
        raise ValidationError(f"missing embeddings {emb_path} (run build-vectors)")
    embeddings = vec_mod.read_embeddings_tsv(emb_path)
    pairs = vec_mod.read_pairs_tsv(pairs_path)
    usable = sum(
        1 for p in pairs if p.word_a in embeddings and p.word_b in embeddings
    )
    rho = vec_mod.spearman_similarity_eval(embeddings, pairs)
    return {
        "k": k,
        "pairs": len(pairs),
        "usable": usable,
        "skipped": len(pairs) - usable,
        "spearman": rho,
    }
