"""Annotation parsing, pixel mapping, and pair sampling."""

import numpy as np
import pytest

from latentswap.data import (
    ArrayDataset,
    AttributeTable,
    EpochPairSampler,
    denormalize,
    normalize,
    parse_attribute_file,
    sample_pair_batches,
    serialize_attribute_file,
)
from latentswap.errors import AttributeFileParseError, DataError


def table_text():
    return "3\nbangs smile\na.png -1 1\nb.png 1 1\nc.png 1 -1\n"


class TestParser:
    def test_sign_mapping(self):
        table = parse_attribute_file(table_text().splitlines())
        assert table.attribute_names == ["bangs", "smile"]
        assert list(table.bits[0]) == [0, 1]
        assert list(table.bits[2]) == [1, 0]

    def test_count_agreement(self):
        table = parse_attribute_file(table_text().splitlines())
        assert len(table.filenames) == 3

    def test_short_row_names_line(self):
        bad = "2\nbangs smile\na.png -1 1\nb.png 1\n"
        with pytest.raises(AttributeFileParseError) as err:
            parse_attribute_file(bad.splitlines())
        assert err.value.line_number == 4

    def test_bad_value_names_line(self):
        bad = "1\nbangs smile\na.png -1 2\n"
        with pytest.raises(AttributeFileParseError) as err:
            parse_attribute_file(bad.splitlines())
        assert err.value.line_number == 3

    def test_count_mismatch(self):
        bad = "5\nbangs smile\na.png -1 1\n"
        with pytest.raises(AttributeFileParseError):
            parse_attribute_file(bad.splitlines())

    def test_roundtrip_identity(self):
        table = parse_attribute_file(table_text().splitlines())
        again = parse_attribute_file(serialize_attribute_file(table).splitlines())
        assert again.attribute_names == table.attribute_names
        assert again.filenames == table.filenames
        assert np.array_equal(again.bits, table.bits)

    def test_duplicate_filenames_rejected(self):
        bad = "2\nbangs\na.png 1\na.png -1\n"
        with pytest.raises(DataError):
            parse_attribute_file(bad.splitlines())


class TestNormalize:
    def test_endpoints(self):
        assert normalize(np.array([0], dtype=np.uint8))[0] == -1.0
        assert normalize(np.array([255], dtype=np.uint8))[0] == 1.0

    def test_byte_127(self):
        v = normalize(np.array([127], dtype=np.uint8))[0]
        assert abs(v - (127 / 127.5 - 1.0)) < 1e-7
        assert denormalize(np.array([v]))[0] == 127

    def test_roundtrip_all_bytes(self):
        all_bytes = np.arange(256, dtype=np.uint8)
        assert np.array_equal(denormalize(normalize(all_bytes)), all_bytes)

    def test_out_of_range_clamps(self):
        assert denormalize(np.array([-1.5]))[0] == 0
        assert denormalize(np.array([2.0]))[0] == 255


class TestSampling:
    def make_table(self, n_pos=3, n_neg=3):
        bits = np.array([[1]] * n_pos + [[0]] * n_neg, dtype=np.uint8)
        names = [f"{k}.png" for k in range(n_pos + n_neg)]
        return AttributeTable(["attr"], names, bits)

    def test_pool_membership(self):
        table = self.make_table()
        rng = np.random.default_rng(0)
        batch_a, batch_b = sample_pair_batches(table, 0, 2, rng)
        assert all(table.bits[k, 0] == 1 for k in batch_a)
        assert all(table.bits[k, 0] == 0 for k in batch_b)

    def test_seeded_determinism(self):
        table = self.make_table()
        one = sample_pair_batches(table, 0, 2, np.random.default_rng(7))
        two = sample_pair_batches(table, 0, 2, np.random.default_rng(7))
        assert np.array_equal(one[0], two[0]) and np.array_equal(one[1], two[1])

    def test_empty_pool_names_attribute(self):
        bits = np.ones((4, 1), dtype=np.uint8)
        table = AttributeTable(["beard"], [f"{k}.png" for k in range(4)], bits)
        with pytest.raises(DataError, match="beard"):
            sample_pair_batches(table, 0, 2, np.random.default_rng(0))

    def test_epoch_covers_every_positive_exactly_once(self):
        table = self.make_table(n_pos=7, n_neg=5)
        sampler = EpochPairSampler(table, 0, batch_size=7, seed=3)
        drawn = sampler.next_batch()[0]
        assert sorted(drawn) == sorted(np.flatnonzero(table.bits[:, 0] == 1))

    def test_epoch_boundary_reshuffles(self):
        table = self.make_table(n_pos=5, n_neg=5)
        sampler = EpochPairSampler(table, 0, batch_size=3, seed=3)
        seen = np.concatenate([sampler.next_batch()[0] for _ in range(5)])
        first_epoch, second_epoch = seen[:5], seen[5:10]
        assert sorted(first_epoch) == sorted(second_epoch)  # same pool each epoch

    def test_state_roundtrip_continues_identically(self):
        table = self.make_table(n_pos=9, n_neg=9)
        s1 = EpochPairSampler(table, 0, batch_size=4, seed=5)
        s1.next_batch()
        saved = s1.state()
        expected = [s1.next_batch() for _ in range(3)]
        s2 = EpochPairSampler(table, 0, batch_size=4, seed=5)
        s2.load_state(saved)
        got = [s2.next_batch() for _ in range(3)]
        for (ea, eb), (ga, gb) in zip(expected, got):
            assert np.array_equal(ea, ga) and np.array_equal(eb, gb)


class TestArrayDataset:
    def test_from_dir_roundtrip(self, tmp_path, tiny_synth):
        from latentswap.synth import SyntheticSpec, generate_synthetic

        spec = SyntheticSpec(image_size=32, attribute_names=("bangs",), seed=3)
        written, _ = generate_synthetic(spec, 12, out_dir=tmp_path)
        loaded = ArrayDataset.from_dir(tmp_path)
        assert loaded.attribute_names == ["bangs"]
        assert np.array_equal(loaded.images, written.images)
        assert np.array_equal(loaded.table.bits, written.table.bits)

    def test_batch_is_normalized_nchw(self, tiny_synth):
        _, dataset, _ = tiny_synth
        imgs, bits = dataset.batch(np.array([0, 1]))
        assert imgs.shape == (2, 3, 32, 32)
        assert imgs.dtype == np.float32
        assert imgs.min() >= -1.0 and imgs.max() <= 1.0

    def test_missing_image_file(self, tmp_path):
        (tmp_path / "attributes.txt").write_text("1\nbangs\nmissing.png 1\n")
        with pytest.raises(DataError, match="missing.png"):
            ArrayDataset.from_dir(tmp_path)
