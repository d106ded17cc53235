import numpy as np
import pytest

from numerics.rng import RngStream


def test_same_stream_repeats() -> None:
    a = RngStream(42).derive(3).generator().random(8)
    b = RngStream(42).derive(3).generator().random(8)
    np.testing.assert_array_equal(a, b)


def test_derived_streams_differ() -> None:
    root = RngStream(42)
    a = root.derive(0).generator().random(8)
    b = root.derive(1).generator().random(8)
    c = RngStream(42, stream_id=1).derive(0).generator().random(8)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_describe_records_path() -> None:
    stream = RngStream(7, 2).derive(1).derive(5)
    assert stream.describe() == {"seed": 7, "stream_id": 2, "path": [1, 5]}


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_range_is_checked(seed: int) -> None:
    with pytest.raises(ValueError):
        RngStream(seed)


def test_negative_index_is_rejected() -> None:
    with pytest.raises(ValueError):
        RngStream(1).derive(-1)
