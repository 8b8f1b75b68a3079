from typing import Callable

import numpy as np
import pytest

from permix.default import Settings, get_settings
from permix.mixtures import ComponentList


@pytest.fixture
def golden() -> ComponentList:
    '''(Bern(0.2), Bern(0.8)): chi2 = 0.1296, lambda_2 = 0.36'''
    return ComponentList.from_probs([[0.8, 0.2], [0.2, 0.8]])


@pytest.fixture
def random_components() -> Callable[[int, int, int], ComponentList]:
    def make(seed: int, n: int = 3, k: int = 3) -> ComponentList:
        return ComponentList.random(np.random.default_rng(seed), n, k)
    return make


@pytest.fixture(scope='session')
def settings() -> Settings:
    return get_settings('small')


@pytest.fixture(scope='session')
def quick_settings() -> Settings:
    '''small budget with the sweeps cut down for unit tests'''
    return get_settings('small', random_instances=5, mc_samples=4000, mc_instances=2, esp_verify_n_max=8,
                        esp_trials=50, hadamard_trials=20, toy_n_max=2000, capacity_restarts=4,
                        capacity_iterations=40)
