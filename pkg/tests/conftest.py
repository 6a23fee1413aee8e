import json
import os
import random

import pytest

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
CORPUS_DIR = os.path.join(FIXTURES, "corpus")


def ranks_of(text):
    """Map a string to dense integer ranks; returns (ranks, alphabet)."""
    alphabet = sorted(set(text))
    index = {ch: i for i, ch in enumerate(alphabet)}
    return [index[ch] for ch in text], alphabet


def render(symbols, alphabet):
    """Ranks back to text, end marker as '#'."""
    return "".join("#" if c == -1 else alphabet[c] for c in symbols)


def random_ranks(rng, max_n, sigma):
    """Length skews small so edge cases appear often."""
    n = rng.randrange(0, max_n + 1) if rng.random() < 0.5 else rng.randrange(0, max_n // 8 + 2)
    return [rng.randrange(sigma) for _ in range(n)]


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


@pytest.fixture(scope="session")
def calibration():
    with open(os.path.join(FIXTURES, "calibration.json")) as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def corpus():
    out = {}
    for name in sorted(os.listdir(CORPUS_DIR)):
        with open(os.path.join(CORPUS_DIR, name), "rb") as fh:
            out[name] = fh.read()
    return out


# -- independent oracles used across test modules ---------------------------


def oracle_backward_sort(extended):
    """Positions sorted by full cyclic backward context, straight from the definition."""
    m = len(extended)
    def context(i):
        return tuple(extended[(i - 1 - j) % m] for j in range(m))
    return sorted(range(m), key=context)


def oracle_bwt(s):
    extended = list(s) + [-1]
    return [extended[i] for i in oracle_backward_sort(extended)]


def oracle_st(s, k):
    extended = list(s) + [-1]
    m = len(extended)
    def context(i):
        return tuple(extended[(i - 1 - j) % m] for j in range(k))
    order = sorted(range(m), key=lambda i: (context(i), i))
    return [extended[i] for i in order]
