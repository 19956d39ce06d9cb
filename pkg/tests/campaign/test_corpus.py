import threading

import numpy as np
import pytest
from binfecund.campaign.corpus import CorpusEntry, WeightedCorpus, collect, select
from binfecund.exceptions import ConfigurationError

# chi-square critical values at p = 0.01
_CHI2_CRITICAL = {1: 6.635, 2: 9.210}


def _chi_square(counts, expected):
    counts, expected = np.asarray(counts, dtype=float), np.asarray(expected, dtype=float)
    return float(np.sum((counts - expected) ** 2 / expected))


def test_collect():
    corpus = WeightedCorpus()
    assert corpus.collect(b"\x01", 0.0) is None
    assert len(corpus) == 0
    assert corpus.total_weight == 0.0

    entry = corpus.collect(b"\x02", 0.8)
    assert entry == CorpusEntry(0, b"\x02", 0.8)
    assert len(corpus) == 1
    assert corpus.total_weight == 0.8

    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        corpus.collect(b"\x03", 1.5)


def test_collect_sums_weights():
    corpus = WeightedCorpus()
    for seed, dscore in ((b"a", 0.2), (b"b", 0.0), (b"c", 0.3)):
        assert collect(corpus, seed, dscore) is corpus
    assert len(corpus) == 2
    assert corpus.total_weight == pytest.approx(0.5)
    assert [entry.id for entry in corpus] == [0, 1]
    assert [entry.seed for entry in corpus.entries] == [b"a", b"c"]


def test_corpus_entry_needs_positive_weight():
    with pytest.raises(ValueError, match="positive weight"):
        CorpusEntry(0, b"a", 0.0)


def test_select_empty_corpus(rng):
    with pytest.raises(IndexError, match="empty corpus"):
        WeightedCorpus().select(rng)


def test_select_single_entry(rng):
    corpus = WeightedCorpus()
    corpus.collect(b"only", 0.01)
    assert all(select(corpus, rng).seed == b"only" for _ in range(100))


def test_select_is_proportional_to_weight():
    corpus = WeightedCorpus()
    corpus.collect(b"a", 0.75)
    corpus.collect(b"b", 0.25)

    rng = np.random.default_rng(0)
    draws = 100_000
    heavy = sum(corpus.select(rng).seed == b"a" for _ in range(draws))

    assert abs(heavy / draws - 0.75) <= 0.01
    assert _chi_square([heavy, draws - heavy], [0.75 * draws, 0.25 * draws]) < _CHI2_CRITICAL[1]


def test_select_equal_weights():
    corpus = WeightedCorpus()
    for seed in (b"a", b"b", b"c"):
        corpus.collect(seed, 1.0)

    rng = np.random.default_rng(1)
    draws = 30_000
    seeds = [corpus.select(rng).seed for _ in range(draws)]
    counts = [seeds.count(seed) for seed in (b"a", b"b", b"c")]
    assert _chi_square(counts, [draws / 3] * 3) < _CHI2_CRITICAL[2]


def test_concurrent_collect():
    corpus = WeightedCorpus()

    def _collect(worker):
        for i in range(200):
            corpus.collect(bytes([worker, i % 256]), 0.5)

    threads = [threading.Thread(target=_collect, args=(worker,)) for worker in range(4)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()

    assert len(corpus) == 800
    assert corpus.total_weight == 400.0
    assert sorted(entry.id for entry in corpus) == list(range(800))


def test_add_keeps_ids():
    corpus = WeightedCorpus()
    corpus.add(CorpusEntry(7, b"x", 0.5))
    assert corpus.collect(b"y", 0.5).id == 8


def test_save_and_load(tmp_path):
    corpus = WeightedCorpus()
    for i, dscore in enumerate((0.1, 0.0, 0.7, 1.0)):
        corpus.collect(bytes([i, 255 - i]), dscore)
    path = str(tmp_path / "corpus.jsonl")
    corpus.save(path)

    loaded = WeightedCorpus.load(path)
    assert loaded.entries == corpus.entries
    assert loaded.total_weight == corpus.total_weight
    assert loaded.collect(b"z", 0.5).id == 3


@pytest.mark.parametrize(
    "line",
    ['{"id": 0, "seed": "zz", "weight": 0.5}', '{"id": 0, "seed": "00"}', '{"id": 0, "seed": "00", "weight": 0}'],
)
def test_load_corrupted_checkpoint(tmp_path, line):
    path = tmp_path / "corpus.jsonl"
    path.write_text(line + "\n")
    with pytest.raises(ConfigurationError, match="corrupted on line 1"):
        WeightedCorpus.load(str(path))
