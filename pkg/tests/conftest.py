import pytest

from irrigation import mlp


@pytest.fixture(scope="session")
def train_cached():
    """Session-wide memoized trainer so expensive runs happen once."""
    cache = {}

    def _train(grid=11, learning_rate=0.3, seed=1, epochs=2000, batch_size=32):
        key = (grid, learning_rate, seed, epochs, batch_size)
        if key not in cache:
            dataset = mlp.generate_dataset(grid)
            config = mlp.TrainingConfig(
                learning_rate=learning_rate,
                epochs=epochs,
                batch_size=batch_size,
                seed=seed,
            )
            cache[key] = mlp.train(dataset, config)
        return cache[key]

    return _train


@pytest.fixture(scope="session")
def trained_weights(train_cached):
    """Network trained on the default 11-point grid."""
    weights, _ = train_cached(grid=11, learning_rate=0.3, seed=1)
    return weights


@pytest.fixture(scope="session")
def fine_trained_weights(train_cached):
    """Network trained on a denser grid; resolves the band boundaries well."""
    weights, _ = train_cached(grid=21, learning_rate=0.3, seed=0)
    return weights
