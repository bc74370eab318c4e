"""The BGDS dataset container: byte layout and failure diagnostics."""

import numpy as np
import pytest

from spotter import synth
from spotter.errors import FormatError


@pytest.fixture()
def small_ds():
    return synth.generate_dataset(synth.GenConfig("unigram", 24, seed=8))


def test_round_trip_bit_exact(tmp_path, small_ds):
    path = tmp_path / "d.bgds"
    synth.write_dataset(small_ds, path)
    back = synth.read_dataset(path)
    np.testing.assert_array_equal(back.patches, small_ds.patches)
    np.testing.assert_array_equal(back.labels, small_ds.labels)


def test_write_is_deterministic(tmp_path, small_ds):
    p1, p2 = tmp_path / "a.bgds", tmp_path / "b.bgds"
    synth.write_dataset(small_ds, p1)
    synth.write_dataset(small_ds, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_layout_matches_declared_format(tmp_path):
    patches = np.arange(2 * 2 * 3, dtype=np.uint8).reshape(2, 2, 3)
    labels = np.array([1, 0], np.uint8)
    path = tmp_path / "tiny.bgds"
    synth.write_dataset(synth.Dataset(patches, labels), path)
    raw = path.read_bytes()
    assert raw[:8] == b"BGDS0001"
    assert np.frombuffer(raw, "<u4", 3, 8).tolist() == [2, 3, 2]  # count, w, h
    assert raw[20] == 1 and raw[20 + 1 : 20 + 7] == bytes(range(6))
    assert raw[27] == 0 and raw[28:] == bytes(range(6, 12))


def test_empty_file_bad_magic(tmp_path):
    path = tmp_path / "empty.bgds"
    path.write_bytes(b"")
    with pytest.raises(FormatError, match="bad magic"):
        synth.read_dataset(path)


def test_wrong_magic(tmp_path):
    path = tmp_path / "x.bgds"
    path.write_bytes(b"NOTBGDS!" + b"\0" * 40)
    with pytest.raises(FormatError, match="bad magic"):
        synth.read_dataset(path)


def test_header_declares_more_than_payload(tmp_path, small_ds):
    path = tmp_path / "t.bgds"
    synth.write_dataset(small_ds, path)
    raw = bytearray(path.read_bytes())
    raw[8:12] = np.array([999], "<u4").tobytes()  # inflate the sample count
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError, match="truncated"):
        synth.read_dataset(path)


def test_truncated_payload(tmp_path, small_ds):
    path = tmp_path / "t.bgds"
    synth.write_dataset(small_ds, path)
    path.write_bytes(path.read_bytes()[:-10])
    with pytest.raises(FormatError, match="truncated"):
        synth.read_dataset(path)


def test_trailing_garbage_detected(tmp_path, small_ds):
    path = tmp_path / "t.bgds"
    synth.write_dataset(small_ds, path)
    path.write_bytes(path.read_bytes() + b"junk")
    with pytest.raises(FormatError, match="trailing"):
        synth.read_dataset(path)


def test_zero_dimension_rejected(tmp_path):
    path = tmp_path / "z.bgds"
    path.write_bytes(b"BGDS0001" + np.array([1, 0, 32], "<u4").tobytes())
    with pytest.raises(FormatError, match="dimension mismatch"):
        synth.read_dataset(path)
