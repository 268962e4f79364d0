import numpy as np
import pytest

from ptta.encoder import ToyEncoder
from ptta.stylegen import StyleGenConfig, train_styles

DESK_CLASSES = ("dog", "cat", "car", "tree")


def desk_style_config(seed: int, n_styles: int = 8) -> StyleGenConfig:
    # step size tuned for the desk-scale toy space (the production default of
    # 0.002 is far too timid at d_tok=16); iteration count kept at the default
    return StyleGenConfig(n_styles=n_styles, iterations=100, lr=0.1, seed=seed)


@pytest.fixture(scope="session")
def desk_bank_seed0():
    encoder = ToyEncoder(seed=0, token_dim=16, feature_dim=32)
    bank = train_styles(desk_style_config(0), encoder, DESK_CLASSES)
    return encoder, bank


@pytest.fixture(scope="session")
def desk_banks_seeds012():
    out = []
    for seed in (0, 1, 2):
        encoder = ToyEncoder(seed=seed, token_dim=16, feature_dim=32)
        bank = train_styles(desk_style_config(seed), encoder, DESK_CLASSES)
        out.append((encoder, bank))
    return out


def unit_rows(rng: np.random.Generator, rows: int, dim: int) -> np.ndarray:
    x = rng.standard_normal((rows, dim))
    return x / np.linalg.norm(x, axis=1)[:, None]
