import pytest

from verbtensor.synthetic import (
    planted_dataset,
    small_world_config,
    write_fixture,
)


@pytest.fixture(scope="session")
def planted():
    """Separable K=5 dataset with matching embeddings for learner tests."""
    dataset, embeddings = planted_dataset(k=5, n_triples=200, noise=0.35, seed=11)
    return dataset, embeddings


@pytest.fixture(scope="session")
def noisy_planted():
    """Harder planted dataset for learning-curve style checks."""
    dataset, embeddings = planted_dataset(k=5, n_triples=400, noise=0.9, seed=29)
    return dataset, embeddings


SMALL_FIXTURE_OVERRIDES = {
    "vectors.svd_dims": "6,10",
    "vectors.top_n": "",
    "vectors.top_n_sweep": "20,60",
    "training.epochs": 25,
    "experiment.curve_sizes": "8,16",
    "experiment.curve_repeats": 2,
    "experiment.small_cv_size": 20,
}


@pytest.fixture(scope="session")
def small_fixture(tmp_path_factory):
    """A miniature corpus-to-config fixture directory for pipeline tests."""
    directory = tmp_path_factory.mktemp("world")
    config_path = write_fixture(
        directory, small_world_config(seed=7), SMALL_FIXTURE_OVERRIDES
    )
    return config_path
