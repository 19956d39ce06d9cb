import numpy as np
import pytest
from binfecund.campaign.mutator import bit_flip, byte_flip, mutate, splice


def _hamming(a, b):
    return sum(bin(x ^ y).count("1") for x, y in zip(a, b))


def test_bit_flip_distance():
    rng = np.random.default_rng(0)
    seed = bytes(range(16))
    for _ in range(500):
        assert 1 <= _hamming(bit_flip(seed, rng), seed) <= 8


def test_bit_flip_on_a_single_byte():
    rng = np.random.default_rng(1)
    for _ in range(100):
        child = bit_flip(b"\x00", rng)
        assert len(child) == 1
        assert child != b"\x00"


def test_byte_flip_changes_at_most_four_bytes():
    rng = np.random.default_rng(2)
    seed = bytes(32)
    for _ in range(500):
        child = byte_flip(seed, rng)
        assert len(child) == 32
        assert sum(a != b for a, b in zip(child, seed)) <= 4


def test_splice_of_identical_parents():
    rng = np.random.default_rng(3)
    for _ in range(100):
        seed = rng.integers(0, 256, 12, dtype=np.uint8).tobytes()
        assert splice(seed, seed, 12, rng) == seed


def test_splice_is_a_crossover():
    rng = np.random.default_rng(4)
    for _ in range(100):
        child = splice(b"\x00" * 8, b"\xff" * 8, 8, rng)
        cut = child.find(b"\xff")
        cut = 8 if cut < 0 else cut
        assert child == b"\x00" * cut + b"\xff" * (8 - cut)


@pytest.mark.parametrize(("primary", "width"), [(bytes(8), 8), (bytes(4), 10), (bytes(12), 6), (b"", 5)])
def test_mutate_fits_the_width(primary, width):
    rng = np.random.default_rng(5)
    for donor in (None, bytes(range(width))):
        for _ in range(50):
            assert len(mutate(primary, donor, rng, width)) == width


def test_mutate_defaults_to_the_primary_width():
    assert len(mutate(bytes(9), None, np.random.default_rng(6))) == 9


def test_mutate_is_deterministic():
    def _sequence(seed):
        rng = np.random.default_rng(seed)
        current, outputs = bytes(16), []
        for _ in range(1000):
            current = mutate(current, outputs[-2] if len(outputs) > 1 else None, rng, 16)
            outputs.append(current)
        return outputs

    assert _sequence(42) == _sequence(42)
    assert _sequence(42) != _sequence(43)


def test_mutate_uses_every_operator():
    rng = np.random.default_rng(7)
    primary, donor = b"\x00" * 16, b"\xff" * 16
    children = [mutate(primary, donor, rng, 16) for _ in range(300)]
    crossovers = {b"\x00" * cut + b"\xff" * (16 - cut) for cut in range(1, 15)}
    assert any(child in crossovers for child in children)
    assert any(1 <= _hamming(child, primary) <= 8 for child in children)
