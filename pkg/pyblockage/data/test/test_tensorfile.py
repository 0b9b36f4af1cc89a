import os
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pyblockage.analysis.tensorops import partial_unfold
from pyblockage.data import tensorfile as tf

ATTRS = {'scan_period_s': 0.003, 'tap_spacing_ns': 1.0, 'carrier_ghz': 60.48}


def complex_tensor(shape, seed=0):
    '''Complex values that survive the 32-bit round trip exactly.'''
    rng = np.random.default_rng(seed)
    values = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return values.astype(np.complex64).astype(complex)


def test_complex_round_trip_is_bit_identical(tmp_path):
    """A (4, 2, 2, 3) complex tensor reads back unchanged."""
    values = complex_tensor((4, 2, 2, 3))
    f = tf.write_tensor(str(tmp_path / 'x.bmt'), values, attrs=ATTRS)
    back = tf.read_tensor(f)
    assert back.dims == tf.DIMS_4WAY
    assert back.values.tobytes() == values.tobytes()
    assert back.attrs['n_tx'] == 2 and back.attrs['n_rx'] == 2
    assert back.attrs['scan_period_s'] == 0.003
    np.testing.assert_allclose(back['time'].values, [0.0, 0.003, 0.006])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 5), min_size=3, max_size=4))
def test_round_trip_random_shapes(tmp_path_factory, shape):
    path = str(tmp_path_factory.mktemp('bmt') / 'x.bmt')
    if len(shape) == 4:
        values = complex_tensor(shape, seed=sum(shape))
    else:
        values = np.abs(complex_tensor(shape, seed=sum(shape)).real)
    tf.write_tensor(path, values, attrs=ATTRS)
    back = tf.read_tensor(path)
    np.testing.assert_array_equal(back.values, values)
    assert os.path.getsize(path) == tf.file_nbytes(
        shape, tf.COMPLEX if len(shape) == 4 else tf.REAL)


def test_power_tensor_keeps_beam_map(tmp_path):
    t3 = partial_unfold(complex_tensor((3, 2, 4, 5)))
    t3.attrs.update(ATTRS)
    path = tf.write_tensor(str(tmp_path / 'p.bmt'), t3)
    back = tf.read_tensor(path)
    assert back.dims == tf.DIMS_3WAY
    assert back.attrs['n_tx'] == 4 and back.attrs['n_rx'] == 2
    np.testing.assert_array_equal(back['tx_beam'].values,
                                  t3['tx_beam'].values)


def test_full_scale_file_size():
    """64 x 144 x 1666 power tensor: preamble, 56-byte header, payload."""
    assert tf.header_nbytes(3) == 56
    assert tf.file_nbytes((64, 144, 1666)) == 24 + 56 + 4 * 64 * 144 * 1666


def test_payload_is_delay_fastest(tmp_path):
    values = np.arange(2 * 3 * 4, dtype=float).reshape(2, 3, 4)
    path = tf.write_tensor(str(tmp_path / 'p.bmt'), values,
                           attrs=dict(ATTRS, n_tx=3, n_rx=1))
    with open(path, 'rb') as f:
        f.seek(24 + tf.header_nbytes(3))
        payload = np.frombuffer(f.read(), dtype='<f4')
    i, j, k = 1, 2, 3
    assert payload[(k * 3 + j) * 2 + i] == values[i, j, k]


def test_bad_magic(tmp_path):
    path = tf.write_tensor(str(tmp_path / 'x.bmt'),
                           complex_tensor((2, 1, 1, 2)), attrs=ATTRS)
    with open(path, 'r+b') as f:
        f.write(b'XXXX')
    with pytest.raises(tf.BadMagicError):
        tf.read_tensor(path)


def test_truncated_payload(tmp_path):
    path = tf.write_tensor(str(tmp_path / 'x.bmt'),
                           complex_tensor((2, 1, 1, 2)), attrs=ATTRS)
    size = os.path.getsize(path)
    with open(path, 'r+b') as f:
        f.truncate(size - 3)
    with pytest.raises(tf.TruncatedPayloadError):
        tf.read_tensor(path)


def _raw_file(path, shape, payload_len, kind=tf.REAL):
    header = struct.pack('<{0}Q'.format(len(shape)), *shape) \
        + struct.pack('<dddII', 0.003, 1.0, 60.48, 0, 0)
    preamble = struct.pack('<4sHBBB3xIQ', b'BMT1', 1, len(shape), kind, 0,
                           len(header), payload_len)
    with open(path, 'wb') as f:
        f.write(preamble + header)
    return path


def test_size_overflow(tmp_path):
    path = _raw_file(str(tmp_path / 'x.bmt'), (2**30, 2**30, 2**30), 0)
    with pytest.raises(tf.SizeOverflowError):
        tf.read_tensor(path)


def test_inconsistent_payload_length(tmp_path):
    path = _raw_file(str(tmp_path / 'x.bmt'), (2, 3, 4), 7)
    with pytest.raises(tf.HeaderError):
        tf.read_tensor(path)


def test_errors_share_a_base_class():
    for cls in (tf.BadMagicError, tf.TruncatedPayloadError,
                tf.SizeOverflowError, tf.HeaderError):
        assert issubclass(cls, tf.TensorFileError)


def test_write_is_atomic(tmp_path):
    tf.write_tensor(str(tmp_path / 'x.bmt'), complex_tensor((2, 1, 1, 2)),
                    attrs=ATTRS)
    assert sorted(os.listdir(tmp_path)) == ['x.bmt']


def test_write_rejects_bad_tensors(tmp_path):
    with pytest.raises(ValueError):
        tf.write_tensor(str(tmp_path / 'x.bmt'), np.ones((2, 2, 2, 2)))
    with pytest.raises(ValueError):
        tf.write_tensor(str(tmp_path / 'x.bmt'), np.ones((2, 2)))
