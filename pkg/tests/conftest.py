import numpy as np
import pytest

from wordlattice.lattice import build_lattice
from wordlattice.matcher import compile_matcher
from wordlattice.vocab import build_vocabulary

FIG1_TEXT = "研究生活很充实"
FIG1_WORDS = {"研究": 5, "研究生": 4, "生活": 6, "充实": 3}


@pytest.fixture(scope="session")
def fig1_vocab():
    return build_vocabulary([FIG1_TEXT, "生活"], max_words=10, words=FIG1_WORDS)


@pytest.fixture(scope="session")
def fig1_matcher(fig1_vocab):
    return compile_matcher(fig1_vocab)


@pytest.fixture()
def fig1_lattice(fig1_vocab, fig1_matcher):
    return build_lattice(FIG1_TEXT, fig1_matcher, fig1_vocab)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
