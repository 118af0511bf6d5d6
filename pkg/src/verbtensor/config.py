"""Pipeline configuration: a flat INI file with four sections plus verbs.

Relative paths in ``[paths]`` resolve against the config file's directory.
All randomness in the pipeline flows from the named seeds here; nothing reads
the clock or OS entropy, so identical configs give identical outputs.
"""

from configparser import ConfigParser
from dataclasses import dataclass, field
from pathlib import Path

from .tensor_model import TrainConfig
from .util import ValidationError, derive_seed


@dataclass(frozen=True)
class PipelineConfig:
    config_dir: Path
    corpus: Path
    stopwords: Path
    triples: Path
    dev_pairs: Path | None
    output_dir: Path
    context_vocab_size: int = 10000
    top_n: int | None = None
    top_n_sweep: tuple = (25, 50, 100, 200, 400)
    svd_dims: tuple = (20, 40)
    scale_by_singular_values: bool = True
    train: TrainConfig = field(default_factory=TrainConfig)
    positive_cap: int = 2000
    bucket_size: int = 10
    cv_seed: int = 17
    data_seed: int = 23
    curve_sizes: tuple = (10, 50, 100, 200)
    curve_repeats: int = 5
    curve_verbs: tuple = ()
    small_cv_size: int = 52
    verbs: dict = field(default_factory=dict)  # verb -> concreteness score

    @property
    def primary_k(self) -> int:
        return self.svd_dims[0]

    def vectors_dir(self) -> Path:
        return self.output_dir / "vectors"

    def datasets_dir(self) -> Path:
        return self.output_dir / "datasets"

    def models_dir(self) -> Path:
        return self.output_dir / "models"

    def reports_dir(self) -> Path:
        return self.output_dir / "reports"


def _parse_int_tuple(raw: str) -> tuple:
    return tuple(int(part.strip()) for part in raw.split(",") if part.strip())


def _parse_str_tuple(raw: str) -> tuple:
    return tuple(part.strip() for part in raw.split(",") if part.strip())


def load_config(path, out_override=None, seed_override=None) -> PipelineConfig:
    """Parse and sanity-check a pipeline config file.

    ``out_override`` replaces the configured output directory; a
    ``seed_override`` rebases every named seed deterministically, which gives
    a one-flag way to rerun the whole pipeline with fresh randomness.
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"config file not found: {path}")
    parser = ConfigParser(interpolation=None)
    with open(path, "r", encoding="utf-8") as handle:
        parser.read_file(handle)
    base = path.parent

    def _path(section, key, required=True):
        raw = parser.get(section, key, fallback="").strip()
        if not raw:
            if required:
                raise ValidationError(f"config is missing [{section}] {key}")
            return None
        candidate = Path(raw)
        return candidate if candidate.is_absolute() else (base / candidate)

    def _get(section, key, cast, default):
        raw = parser.get(section, key, fallback=None)
        if raw is None or not raw.strip():
            return default
        try:
            if cast is bool:
                return raw.strip().lower() in ("1", "true", "yes", "on")
            return cast(raw.strip())
        except ValueError as exc:
            raise ValidationError(f"bad value for [{section}] {key}: {raw!r}") from exc

    corpus = _path("paths", "corpus")
    stopwords = _path("paths", "stopwords")
    triples = _path("paths", "triples")
    dev_pairs = _path("paths", "dev_pairs", required=False)
    output_dir = out_override or _path("paths", "output_dir")
    output_dir = Path(output_dir)
    if not output_dir.is_absolute():
        output_dir = base / output_dir

    train_seed = _get("training", "seed", int, 13)
    cv_seed = _get("experiment", "cv_seed", int, 17)
    data_seed = _get("experiment", "data_seed", int, 23)
    if seed_override is not None:
        train_seed = seed_override
        cv_seed = derive_seed(seed_override, "cv")
        data_seed = derive_seed(seed_override, "data")

    try:
        train = TrainConfig(
            learning_rate=_get("training", "learning_rate", float, 0.05),
            adagrad_epsilon=_get("training", "adagrad_epsilon", float, 1e-8),
            l2_lambda=_get("training", "l2_lambda", float, 1e-4),
            epochs=_get("training", "epochs", int, 100),
            init_scale=_get("training", "init_scale", float, 0.01),
            seed=train_seed,
            update_mode=_get("training", "update_mode", str, "stochastic"),
            regularize_theta=_get("training", "regularize_theta", bool, True),
        )
    except ValueError as exc:
        raise ValidationError(f"bad training configuration: {exc}") from exc

    verbs = {}
    if parser.has_section("verbs"):
        for verb, raw in parser.items("verbs"):
            try:
                verbs[verb] = float(raw)
            except ValueError as exc:
                raise ValidationError(f"bad concreteness for verb {verb!r}: {raw!r}") from exc
    if not verbs:
        raise ValidationError("config needs a [verbs] section with at least one verb")

    svd_dims = _get("vectors", "svd_dims", _parse_int_tuple, (20, 40))
    if not svd_dims or any(k < 1 for k in svd_dims):
        raise ValidationError(f"svd_dims must be positive integers, got {svd_dims}")

    config = PipelineConfig(
        config_dir=base,
        corpus=corpus,
        stopwords=stopwords,
        triples=triples,
        dev_pairs=dev_pairs,
        output_dir=output_dir,
        context_vocab_size=_get("vectors", "context_vocab_size", int, 10000),
        top_n=_get("vectors", "top_n", int, None),
        top_n_sweep=_get("vectors", "top_n_sweep", _parse_int_tuple, (25, 50, 100, 200, 400)),
        svd_dims=svd_dims,
        scale_by_singular_values=_get("vectors", "scale_by_singular_values", bool, True),
        train=train,
        positive_cap=_get("experiment", "positive_cap", int, 2000),
        bucket_size=_get("experiment", "bucket_size", int, 10),
        cv_seed=cv_seed,
        data_seed=data_seed,
        curve_sizes=_get("experiment", "curve_sizes", _parse_int_tuple, (10, 50, 100, 200)),
        curve_repeats=_get("experiment", "curve_repeats", int, 5),
        curve_verbs=_get("experiment", "curve_verbs", _parse_str_tuple, ()),
        small_cv_size=_get("experiment", "small_cv_size", int, 52),
        verbs=verbs,
    )
    _check_static(config)
    return config


def _check_static(config: PipelineConfig) -> None:
    if config.context_vocab_size < 1:
        raise ValidationError("context_vocab_size must be positive")
    if config.positive_cap < 1:
        raise ValidationError("positive_cap must be positive")
    if config.bucket_size < 1:
        raise ValidationError("bucket_size must be positive")
    if config.top_n is not None and config.top_n < 1:
        raise ValidationError("top_n must be positive when set")
    if config.small_cv_size < 4:
        raise ValidationError("small_cv_size must be at least 4")
    unknown = [v for v in config.curve_verbs if v not in config.verbs]
    if unknown:
        raise ValidationError(f"curve_verbs not in [verbs]: {unknown}")


def require_input_files(config: PipelineConfig, *names) -> None:
    """Fail fast when a referenced input file is absent."""
    missing = []
    for name in names:
        value = getattr(config, name)
        if value is None:
            continue
        if not Path(value).is_file():
            missing.append(f"{name}: {value}")
    if missing:
        raise ValidationError("missing input files: " + "; ".join(missing))
