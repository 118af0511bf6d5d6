"""The verb tensor classifier and its Adagrad training loop.

A verb is a K x K x 2 tensor that maps a (subject, object) embedding pair
into a 2-dimensional sentence space whose axes read as plausible and
implausible. The raw bilinear outputs pass through a sigmoid and then an
affine softmax layer with per-class parameters, giving a probability
distribution over the two classes.

Training minimizes, over all parameters B = (tensor, theta), the summed
KL divergence between one-hot gold distributions and the predicted
distributions, plus an L2 penalty (lambda/2) * ||B||^2. With one-hot targets
the KL term is exactly the cross entropy -log p[correct], which is what the
code computes. Gradients are exact chain-rule derivatives and updates use
per-parameter Adagrad.
"""

import logging
import random
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from .data import IMPLAUSIBLE, PLAUSIBLE
from .linalg import bilinear_contract, read_tvb, write_tvb
from .util import TrainingDiverged, derive_seed

log = logging.getLogger(__name__)

SENTENCE_DIM = 2
PLAUSIBLE_INDEX = 0


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    adagrad_epsilon: float = 1e-8
    l2_lambda: float = 1e-4
    epochs: int = 100
    init_scale: float = 0.01
    seed: int = 0
    update_mode: str = "stochastic"  # or "batch"
    regularize_theta: bool = True

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.adagrad_epsilon <= 0:
            raise ValueError("adagrad_epsilon must be positive")
        if self.l2_lambda < 0:
            raise ValueError("l2_lambda must be non-negative")
        if self.epochs < 1:
            raise ValueError("epochs must be a positive integer")
        if self.init_scale <= 0:
            raise ValueError("init_scale must be positive")
        if self.update_mode not in ("stochastic", "batch"):
            raise ValueError(f"unknown update_mode {self.update_mode!r}")


@dataclass
class VerbTensorModel:
    tensor: np.ndarray  # (K, K, SENTENCE_DIM)
    theta: np.ndarray   # (2, SENTENCE_DIM + 1): weights on sigmoid outputs plus bias
    verb: str = ""

    @property
    def k(self) -> int:
        return int(self.tensor.shape[0])

    def copy(self) -> "VerbTensorModel":
        return VerbTensorModel(self.tensor.copy(), self.theta.copy(), self.verb)


@dataclass(frozen=True)
class ForwardTrace:
    z: np.ndarray  # bilinear pre-activations, dim 2
    a: np.ndarray  # sigmoid outputs, dim 2
    p: np.ndarray  # class distribution, dim 2


@dataclass(frozen=True)
class Gradients:
    tensor: np.ndarray
    theta: np.ndarray


@dataclass(frozen=True)
class TrainResult:
    model: VerbTensorModel
    objective_trace: tuple  # objective at init, then after each epoch


def init_model(k: int, config: TrainConfig, verb: str = "") -> VerbTensorModel:
    """Uniform random initialization in [-init_scale, +init_scale], seeded."""
    rng = np.random.default_rng(derive_seed(config.seed, "init", k))
    tensor = rng.uniform(-config.init_scale, config.init_scale, size=(k, k, SENTENCE_DIM))
    theta = rng.uniform(-config.init_scale, config.init_scale, size=(2, SENTENCE_DIM + 1))
    return VerbTensorModel(tensor=tensor, theta=theta, verb=verb)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def forward(model: VerbTensorModel, n_s, n_o) -> ForwardTrace:
    """Full forward pass: contraction, sigmoid, affine softmax."""
    z = bilinear_contract(model.tensor, n_s, n_o)
    a = expit(z)
    logits = model.theta[:, :SENTENCE_DIM] @ a + model.theta[:, SENTENCE_DIM]
    p = _softmax(logits)
    return ForwardTrace(z=z, a=a, p=p)


def _batch_arrays(batch):
    subjects = np.asarray([np.asarray(s, dtype=np.float64) for s, _, _ in batch])
    objects_ = np.asarray([np.asarray(o, dtype=np.float64) for _, o, _ in batch])
    targets = np.asarray([np.asarray(t, dtype=np.float64) for _, _, t in batch])
    return subjects, objects_, targets


def _objective_arrays(tensor, theta, subjects, objects_, targets, l2_lambda, regularize_theta):
    # overflow here is the divergence signal the caller checks for, not noise
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        z = np.einsum("ni,ijc,nj->nc", subjects, tensor, objects_)
        a = expit(z)
        logits = a @ theta[:, :SENTENCE_DIM].T + theta[:, SENTENCE_DIM]
        p = _softmax(logits)
        correct = np.argmax(targets, axis=1)
        losses = -np.log(p[np.arange(len(p)), correct])
        reg = 0.5 * l2_lambda * float(np.sum(tensor * tensor))
        if regularize_theta:
            reg += 0.5 * l2_lambda * float(np.sum(theta * theta))
        return float(losses.sum() + reg)


def objective(model: VerbTensorModel, batch, l2_lambda: float, regularize_theta: bool = True) -> float:
    """Summed cross entropy over the batch plus the L2 penalty.

    Raises when the value is non-finite, which indicates diverging
    parameters rather than a recoverable condition.
    """
    if not batch:
        raise ValueError("objective requires a non-empty batch")
    subjects, objects_, targets = _batch_arrays(batch)
    value = _objective_arrays(
        model.tensor, model.theta, subjects, objects_, targets, l2_lambda, regularize_theta
    )
    if not np.isfinite(value):
        raise TrainingDiverged("objective is non-finite: parameters diverged")
    return value


def gradients(model: VerbTensorModel, example, l2_lambda: float, regularize_theta: bool = True) -> Gradients:
    """Exact gradients of one example's regularized loss.

    Chain rule, layer by layer: dL/dlogit = p - t; the theta gradient is the
    outer product of that with (a, 1); dL/da flows back through theta's
    weight block; dL/dz scales by the sigmoid derivative a(1-a); and the
    tensor gradient is the rank-1 expansion dz[c] * s[i] * o[j]. The L2 term
    adds lambda times each parameter.
    """
    n_s, n_o, target = example
    trace = forward(model, n_s, n_o)
    n_s = np.asarray(n_s, dtype=np.float64)
    n_o = np.asarray(n_o, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    d_logit = trace.p - target
    d_theta = np.empty_like(model.theta)
    d_theta[:, :SENTENCE_DIM] = d_logit[:, None] * trace.a
    d_theta[:, SENTENCE_DIM] = d_logit
    if l2_lambda and regularize_theta:
        d_theta += l2_lambda * model.theta
    d_a = model.theta[:, :SENTENCE_DIM].T @ d_logit
    d_z = d_a * trace.a * (1.0 - trace.a)
    d_tensor = np.multiply.outer(n_s, n_o)[:, :, None] * d_z
    if l2_lambda:
        d_tensor = d_tensor + l2_lambda * model.tensor
    return Gradients(tensor=d_tensor, theta=d_theta)


def adagrad_step(param, grad, accumulator, learning_rate, epsilon) -> None:
    """In-place Adagrad update: accumulate squared gradient, scale the step."""
    accumulator += grad * grad
    param -= learning_rate * grad / (np.sqrt(accumulator) + epsilon)


def _lookup_triples(triples, embeddings):
    subjects = np.asarray([embeddings.vector(t.subject) for t in triples])
    objects_ = np.asarray([embeddings.vector(t.object) for t in triples])
    targets = np.asarray([t.gold_dist for t in triples], dtype=np.float64)
    return subjects, objects_, targets


def train(dataset, embeddings, config: TrainConfig, verb: str | None = None) -> TrainResult:
    """Fit a verb tensor model on labeled triples with per-parameter Adagrad.

    Examples are visited in a freshly shuffled order every epoch (seeded from
    the config), for the configured number of epochs. The returned trace
    holds the full-data objective at initialization and after every epoch;
    a non-finite objective aborts with the offending epoch number.
    """
    if hasattr(dataset, "triples"):
        triples = dataset.triples
        verb = verb if verb is not None else dataset.verb
    else:
        triples = list(dataset)
        verb = verb or ""
    if not triples:
        raise ValueError("cannot train on an empty dataset")
    missing = [t for t in triples if t.subject not in embeddings or t.object not in embeddings]
    if missing:
        raise ValueError(
            f"{len(missing)} triples have nouns without embeddings, e.g. "
            f"({missing[0].subject}, {missing[0].object})"
        )
    subjects, objects_, targets = _lookup_triples(triples, embeddings)
    k = subjects.shape[1]
    if objects_.shape[1] != k:
        raise ValueError("subject and object embedding dims differ")

    model = init_model(k, config, verb)
    tensor, theta = model.tensor, model.theta
    lam = config.l2_lambda
    reg_theta = config.regularize_theta
    lr = config.learning_rate
    eps = config.adagrad_epsilon
    theta_w = slice(0, SENTENCE_DIM)

    def epoch_objective(epoch):
        value = _objective_arrays(tensor, theta, subjects, objects_, targets, lam, reg_theta)
        if not np.isfinite(value):
            raise TrainingDiverged(
                f"objective became non-finite at epoch {epoch}", epoch=epoch
            )
        return value

    trace = [epoch_objective(0)]
    acc_tensor = np.zeros_like(tensor)
    acc_theta = np.zeros_like(theta)
    order = list(range(len(triples)))
    order_rng = random.Random(derive_seed(config.seed, "epoch-order"))

    for epoch in range(1, config.epochs + 1):
        if config.update_mode == "stochastic":
            order_rng.shuffle(order)
            for i in order:
                s_vec = subjects[i]
                o_vec = objects_[i]
                z = bilinear_contract(tensor, s_vec, o_vec)
                a = expit(z)
                logits = theta[:, theta_w] @ a + theta[:, SENTENCE_DIM]
                p = _softmax(logits)
                d_logit = p - targets[i]
                d_theta = np.empty_like(theta)
                d_theta[:, theta_w] = d_logit[:, None] * a
                d_theta[:, SENTENCE_DIM] = d_logit
                if lam and reg_theta:
                    d_theta += lam * theta
                d_a = theta[:, theta_w].T @ d_logit
                d_z = d_a * a * (1.0 - a)
                d_tensor = np.multiply.outer(s_vec, o_vec)[:, :, None] * d_z
                if lam:
                    d_tensor += lam * tensor
                adagrad_step(tensor, d_tensor, acc_tensor, lr, eps)
                adagrad_step(theta, d_theta, acc_theta, lr, eps)
        else:
            z = np.einsum("ni,ijc,nj->nc", subjects, tensor, objects_)
            a = expit(z)
            logits = a @ theta[:, theta_w].T + theta[:, SENTENCE_DIM]
            p = _softmax(logits)
            d_logit = p - targets
            d_theta = np.empty_like(theta)
            d_theta[:, theta_w] = d_logit.T @ a
            d_theta[:, SENTENCE_DIM] = d_logit.sum(axis=0)
            if lam and reg_theta:
                d_theta += lam * theta
            d_a = d_logit @ theta[:, theta_w]
            d_z = d_a * a * (1.0 - a)
            d_tensor = np.einsum("ni,nj,nc->ijc", subjects, objects_, d_z)
            if lam:
                d_tensor += lam * tensor
            adagrad_step(tensor, d_tensor, acc_tensor, lr, eps)
            adagrad_step(theta, d_theta, acc_theta, lr, eps)
        trace.append(epoch_objective(epoch))

    return TrainResult(model=model, objective_trace=tuple(trace))


def predict(model: VerbTensorModel, n_s, n_o):
    """Label and plausibility probability for one subject-object pair.

    Ties at exactly 0.5 resolve to plausible; the probability doubles as the
    ranking score for AUC.
    """
    trace = forward(model, n_s, n_o)
    p_plausible = float(trace.p[PLAUSIBLE_INDEX])
    label = PLAUSIBLE if p_plausible >= 0.5 else IMPLAUSIBLE
    return label, p_plausible


def save_model(base_path, model: VerbTensorModel, config: TrainConfig, objective_trace=()) -> None:
    """Write ``<base>.tvbm`` (tensor block, then theta block) and ``<base>.meta``.

    The sidecar is plain text: model shape, the training configuration and
    the per-epoch objective trace as CSV.
    """
    base = str(base_path)
    with open(base + ".tvbm", "wb") as handle:
        write_tvb(handle, model.tensor)
        write_tvb(handle, model.theta)
    lines = [
        f"verb = {model.verb}",
        f"k = {model.k}",
        f"s = {SENTENCE_DIM}",
        f"learning_rate = {config.learning_rate!r}",
        f"adagrad_epsilon = {config.adagrad_epsilon!r}",
        f"l2_lambda = {config.l2_lambda!r}",
        f"epochs = {config.epochs}",
        f"init_scale = {config.init_scale!r}",
        f"seed = {config.seed}",
        f"update_mode = {config.update_mode}",
        f"regularize_theta = {str(config.regularize_theta).lower()}",
        "",
        "[objective_trace]",
        "epoch,objective",
    ]
    lines += [f"{i},{value!r}" for i, value in enumerate(objective_trace)]
    with open(base + ".meta", "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def load_model(base_path) -> VerbTensorModel:
    base = str(base_path)
    with open(base + ".tvbm", "rb") as handle:
        tensor = read_tvb(handle)
        theta = read_tvb(handle)
    verb = ""
    try:
        with open(base + ".meta", "r", encoding="utf-8") as handle:
            for line in handle:
                if line.startswith("verb = "):
                    verb = line[len("verb = "):].strip()
                    break
    except FileNotFoundError:
        pass
    return VerbTensorModel(tensor=tensor, theta=theta, verb=verb)


def with_seed(config: TrainConfig, seed: int) -> TrainConfig:
    return replace(config, seed=seed)
