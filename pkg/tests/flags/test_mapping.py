import numpy as np
import pytest
from binfecund.flags.catalog import parse_catalog
from binfecund.flags.mapping import FlagSelection, map_seed, random_seed

from tests.utils import switch_catalog


@pytest.mark.parametrize(
    ("byte", "expected"),
    [
        (0x00, ()),
        (0x04, ()),
        (0x05, ("--frame-pointer=all",)),
        (0x01, ("--frame-pointer=all",)),
        (0x02, ("--frame-pointer=non-leaf",)),
        (0x03, ("--frame-pointer=none",)),
    ],
)
def test_map_seed_enum(byte, expected):
    catalog = parse_catalog("--frame-pointer\tenum:all,non-leaf,none\n")
    assert map_seed(catalog, bytes([byte])).rendered == expected


def test_map_seed_uint():
    catalog = parse_catalog("--stack-alignment\tuint\n")

    selection = map_seed(catalog, bytes([0x03, 0x10]))
    assert selection.rendered == ("--stack-alignment=16",)
    assert selection.entries == (16,)

    assert map_seed(catalog, bytes([0x02, 0x10])).rendered == ()
    assert map_seed(catalog, bytes([0x01, 0x00])).rendered == ("--stack-alignment=0",)


def test_map_seed_switches():
    catalog = parse_catalog(switch_catalog(3))

    selection = map_seed(catalog, bytes([0x01, 0x00, 0x02]))
    assert selection.rendered == ("-ftoy-00",)
    assert selection.active_indices() == [0]
    assert selection.selected(0)
    assert not selection.selected(2)


def test_map_seed_mixed(frame_pointer_catalog):
    catalog = parse_catalog(frame_pointer_catalog)
    selection = map_seed(catalog, bytes([0xFF, 0x02, 0x07, 0x80]))
    assert selection.rendered == ("--addrsig", "--frame-pointer=non-leaf", "--stack-alignment=128")
    assert selection.entries == (True, "non-leaf", 128)


def test_map_seed_short_and_long_seeds(frame_pointer_catalog):
    catalog = parse_catalog(frame_pointer_catalog)

    # the uint needs both of its bytes
    assert map_seed(catalog, bytes([0x01, 0x01, 0x01])).rendered == ("--addrsig", "--frame-pointer=all")
    assert map_seed(catalog, b"") == FlagSelection.empty(catalog)

    long_seed = bytes([0x01, 0x00, 0x00, 0x00]) + bytes(range(1, 64))
    assert map_seed(catalog, long_seed).rendered == ("--addrsig",)


def test_map_seed_is_deterministic(frame_pointer_catalog):
    catalog = parse_catalog(frame_pointer_catalog)
    rng = np.random.default_rng(7)
    for _ in range(50):
        seed = random_seed(catalog.total_width, rng)
        assert map_seed(catalog, seed) == map_seed(catalog, bytes(seed))


def test_random_seed(rng):
    seed = random_seed(16, rng)
    assert isinstance(seed, bytes)
    assert len(seed) == 16
    assert random_seed(0, rng) == b""

    assert random_seed(16, np.random.default_rng(3)) == random_seed(16, np.random.default_rng(3))


def test_uniform_seeds_turn_on_half_the_switches():
    catalog = parse_catalog(switch_catalog(40))
    rng = np.random.default_rng(0)
    active = [len(map_seed(catalog, random_seed(40, rng)).active_indices()) for _ in range(500)]
    assert 19 < np.mean(active) < 21


def test_every_byte_value_maps_uniformly(frame_pointer_catalog):
    catalog = parse_catalog(frame_pointer_catalog)
    switch_on = sum(map_seed(catalog, bytes([b, 0, 0, 0])).selected(0) for b in range(256))
    assert switch_on == 128

    enum_states = [map_seed(catalog, bytes([0, b, 0, 0])).entries[1] for b in range(256)]
    assert {state: enum_states.count(state) for state in set(enum_states)} == {
        None: 64,
        "all": 64,
        "non-leaf": 64,
        "none": 64,
    }

    uint_on = [map_seed(catalog, bytes([0, 0, b, 7])).entries[2] for b in range(256)]
    assert uint_on.count(7) == 128
    assert uint_on.count(None) == 128
    assert [map_seed(catalog, bytes([0, 0, 1, b])).entries[2] for b in range(256)] == list(range(256))
