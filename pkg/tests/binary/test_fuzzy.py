import numpy as np
import pytest
from binfecund.binary.fuzzy import FuzzyDigest, fuzzy_difference, fuzzy_digest, fuzzy_similarity


def _random_bytes(size, seed=0):
    return np.random.default_rng(seed).integers(0, 256, size, dtype=np.uint8).tobytes()


def test_fuzzy_digest_format():
    digest = fuzzy_digest(_random_bytes(8192))
    assert digest.block_size % 3 == 0
    assert 0 < len(digest.sig1) <= 64
    assert len(digest.sig2) <= 32
    assert FuzzyDigest.from_string(str(digest)) == digest


def test_fuzzy_digest_is_deterministic():
    data = _random_bytes(5000, seed=3)
    assert fuzzy_digest(data) == fuzzy_digest(bytearray(data))


def test_fuzzy_digest_of_empty_data():
    digest = fuzzy_digest(b"")
    assert digest == FuzzyDigest(3, "", "")
    assert fuzzy_difference(digest, digest) == 0.0


def test_identical_inputs():
    digest = fuzzy_digest(_random_bytes(16384))
    assert fuzzy_similarity(digest, digest) == 100
    assert fuzzy_difference(digest, digest) == 0.0


def test_small_edit_keeps_similarity():
    data = _random_bytes(16384, seed=5)
    edited = data[:8000] + bytes(16) + data[8016:]
    a, b = fuzzy_digest(data), fuzzy_digest(edited)
    assert fuzzy_similarity(a, b) > 50
    assert fuzzy_difference(a, b) == pytest.approx(1.0 - fuzzy_similarity(a, b) / 100)


def test_unrelated_inputs():
    a = fuzzy_digest(_random_bytes(16384, seed=1))
    b = fuzzy_digest(_random_bytes(16384, seed=2))
    assert fuzzy_similarity(a, b) == 0
    assert fuzzy_difference(a, b) == 1.0


def test_difference_is_symmetric():
    data = _random_bytes(12000, seed=9)
    digests = [fuzzy_digest(data[:n]) for n in (12000, 11000, 6000, 3000)]
    for a in digests:
        for b in digests:
            assert fuzzy_difference(a, b) == fuzzy_difference(b, a)
            assert 0.0 <= fuzzy_difference(a, b) <= 1.0


def test_incompatible_block_sizes():
    assert fuzzy_similarity(FuzzyDigest(3, "abcdefgh", "abcd"), FuzzyDigest(12, "abcdefgh", "abcd")) == 0


def test_difference_bounds_on_random_pairs():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        x = rng.integers(0, 256, int(rng.integers(0, 1024)), dtype=np.uint8).tobytes()
        y = rng.integers(0, 256, int(rng.integers(0, 1024)), dtype=np.uint8).tobytes()
        if rng.random() < 0.3 and x:
            # shared prefix so some pairs land strictly between 0 and 1
            y = x[: len(x) // 2] + y
        a, b = fuzzy_digest(x), fuzzy_digest(y)
        assert 0.0 <= fuzzy_difference(a, b) <= 1.0
        assert fuzzy_difference(a, b) == fuzzy_difference(b, a)
        assert fuzzy_difference(a, a) == 0.0
