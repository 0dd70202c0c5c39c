import numpy as np
import pytest

from vne.fixtures import example1, example2, figure1


@pytest.fixture
def ex1():
    return example1()


@pytest.fixture
def ex2():
    return example2()


@pytest.fixture
def fig1():
    return figure1()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
