"""
Reader and writer for BMT1 tensor files.

A BMT1 file holds one measurement tensor, either the 4-way complex tensor
(delay, rx_beam, tx_beam, time) or the 3-way power tensor
(delay, beam_pair, time). The layout is

    preamble   24 bytes   magic, version, mode count, value kind,
                          beam-pair flag, header length, payload length
    header     variable   per-mode uint64 sizes, float64 scan period,
                          tap spacing and carrier, uint32 n_tx and n_rx
    payload    variable   32-bit little-endian floats (real, or real/imag
                          pairs), delay index varying fastest

All fields are little-endian.
"""
import logging
import os
import struct
import tempfile

import numpy as np
import xarray as xr

from pyblockage.analysis.tensorops import power_tensor

logger = logging.getLogger(__name__)

MAGIC = b'BMT1'
VERSION = 1
REAL = 0
COMPLEX = 1

_PREAMBLE = struct.Struct('<4sHBBB3xIQ')
_SCAN = struct.Struct('<dddII')
_VALUE_WIDTH = {REAL: 4, COMPLEX: 8}
_VALUE_DTYPE = {REAL: np.dtype('<f4'), COMPLEX: np.dtype('<c8')}
_MAX_PAYLOAD = 2**63 - 1

DIMS_4WAY = ('delay', 'rx_beam', 'tx_beam', 'time')
DIMS_3WAY = ('delay', 'beam_pair', 'time')


class TensorFileError(Exception):
    """Base class for BMT1 read and write errors"""
    pass


class BadMagicError(TensorFileError):
    """Raised when the file does not start with the BMT1 magic"""
    pass


class TruncatedPayloadError(TensorFileError):
    """Raised when the file ends before the declared payload does"""
    pass


class SizeOverflowError(TensorFileError):
    """Raised when the declared mode sizes do not fit a 64-bit byte count"""
    pass


class HeaderError(TensorFileError):
    """Raised when header fields are invalid or inconsistent"""
    pass


def header_nbytes(n_modes):
    return 8 * n_modes + _SCAN.size


def file_nbytes(shape, value_kind=REAL):
    '''
    Size in bytes of a BMT1 file holding a tensor of the given shape.
    '''
    return (_PREAMBLE.size + header_nbytes(len(shape))
            + _VALUE_WIDTH[value_kind] * int(np.prod(shape, dtype=object)))


def _scan_attrs(tensor, attrs):
    out = dict(getattr(tensor, 'attrs', {}))
    out.update(attrs or {})
    return out


def write_tensor(filename, tensor, attrs=None):
    '''
    Write a 4-way complex or 3-way power tensor to a BMT1 file.

    The file is written to a temporary name in the destination directory
    and moved into place, so readers never see a partial file.

    Parameters
    ----------
    filename : str
        Destination path
    tensor : `xarray.DataArray` or `numpy.ndarray`
        Complex (delay, rx_beam, tx_beam, time) or real
        (delay, beam_pair, time) values
    attrs : dict
        Scan metadata overriding `tensor.attrs`: scan_period_s,
        tap_spacing_ns, carrier_ghz, n_tx, n_rx

    Returns
    -------
    filename : str
    '''
    values = tensor.values if isinstance(tensor, xr.DataArray) \
        else np.asarray(tensor)
    attrs = _scan_attrs(tensor, attrs)

    if values.ndim not in (3, 4):
        raise ValueError('Only 3- and 4-way tensors can be written: {0} modes'
                         .format(values.ndim))
    if values.ndim == 4 and not np.iscomplexobj(values):
        raise ValueError('4-way tensors must be complex.')
    if values.ndim == 3 and np.iscomplexobj(values):
        raise ValueError('3-way tensors must hold real power values.')
    if 0 in values.shape:
        raise ValueError('Mode sizes must be positive: {0}'
                         .format(values.shape))

    kind = COMPLEX if np.iscomplexobj(values) else REAL
    if values.ndim == 4:
        n_tx = values.shape[2]
        n_rx = values.shape[1]
        beam_pair = 0
    else:
        n_tx = int(attrs.get('n_tx') or 0)
        n_rx = int(attrs.get('n_rx') or 0)
        beam_pair = int(n_tx * n_rx == values.shape[1] and n_tx > 0)

    payload = values.astype(_VALUE_DTYPE[kind]).tobytes(order='F')
    header = (struct.pack('<{0}Q'.format(values.ndim), *values.shape)
              + _SCAN.pack(float(attrs.get('scan_period_s', 0.0)),
                           float(attrs.get('tap_spacing_ns', 0.0)),
                           float(attrs.get('carrier_ghz', 0.0)),
                           n_tx, n_rx))
    preamble = _PREAMBLE.pack(MAGIC, VERSION, values.ndim, kind, beam_pair,
                              len(header), len(payload))

    directory = os.path.dirname(os.path.abspath(filename))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix='.bmt1-')
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(preamble)
            f.write(header)
            f.write(payload)
        os.replace(tmp, filename)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise

    logger.info('Wrote %s tensor %s to %s',
                'complex' if kind == COMPLEX else 'power', values.shape,
                filename)
    return filename


def _read_exact(f, n, what):
    data = f.read(n)
    if len(data) < n:
        if what == 'payload':
            raise TruncatedPayloadError('Payload has {0} of {1} bytes.'
                                        .format(len(data), n))
        raise HeaderError('File ends inside the {0}.'.format(what))
    return data


def read_tensor(filename):
    '''
    Read a BMT1 file.

    Returns
    -------
    tensor : `xarray.DataArray`
        Complex128 (delay, rx_beam, tx_beam, time) or float64
        (delay, beam_pair, time) with the scan metadata in `attrs`.

    Raises
    ------
    BadMagicError, HeaderError, SizeOverflowError, TruncatedPayloadError
    '''
    with open(filename, 'rb') as f:
        head = f.read(_PREAMBLE.size)
        if head[:4] != MAGIC:
            raise BadMagicError('{0} is not a BMT1 file (magic {1!r}).'
                                .format(filename, head[:4]))
        if len(head) < _PREAMBLE.size:
            raise HeaderError('File ends inside the preamble.')
        (_, version, n_modes, kind, beam_pair, header_len,
         payload_len) = _PREAMBLE.unpack(head)

        if version != VERSION:
            raise HeaderError('Unsupported BMT1 version {0}.'.format(version))
        if n_modes not in (3, 4):
            raise HeaderError('Mode count must be 3 or 4: {0}'
                              .format(n_modes))
        if kind not in _VALUE_WIDTH:
            raise HeaderError('Unknown value kind {0}.'.format(kind))
        if header_len != header_nbytes(n_modes):
            raise HeaderError('Header length {0} does not match {1} modes.'
                              .format(header_len, n_modes))

        header = _read_exact(f, header_len, 'header')
        shape = struct.unpack_from('<{0}Q'.format(n_modes), header)
        scan_period, tap_spacing, carrier, n_tx, n_rx = \
            _SCAN.unpack_from(header, 8 * n_modes)
        if min(shape) == 0:
            raise HeaderError('Mode sizes must be positive: {0}'
                              .format(shape))

        expected = _VALUE_WIDTH[kind]
        for size in shape:
            expected *= size
        if expected > _MAX_PAYLOAD:
            raise SizeOverflowError('Mode sizes {0} overflow the payload '
                                    'length.'.format(shape))
        if expected != payload_len:
            raise HeaderError('Payload length {0} does not match sizes {1}.'
                              .format(payload_len, shape))

        payload = _read_exact(f, payload_len, 'payload')
        if f.read(1):
            raise HeaderError('Trailing bytes after the payload.')

    values = np.frombuffer(payload, dtype=_VALUE_DTYPE[kind])
    values = values.reshape(shape, order='F')
    attrs = {'scan_period_s': scan_period,
             'tap_spacing_ns': tap_spacing,
             'carrier_ghz': carrier}
    time = np.arange(shape[-1]) * scan_period

    if n_modes == 4:
        if kind != COMPLEX:
            raise HeaderError('4-way tensors must be complex.')
        n_delay, n_rx, n_tx, n_time = shape
        attrs.update(n_tx=n_tx, n_rx=n_rx)
        return xr.DataArray(values.astype(complex),
                            dims=DIMS_4WAY,
                            coords={'delay': np.arange(n_delay) * tap_spacing,
                                    'rx_beam': np.arange(n_rx),
                                    'tx_beam': np.arange(n_tx),
                                    'time': time},
                            attrs=attrs)

    if kind != REAL:
        raise HeaderError('3-way tensors must hold real power values.')
    if beam_pair and n_tx * n_rx != shape[1]:
        raise HeaderError('Beam-pair map {0} x {1} does not match {2} pairs.'
                          .format(n_tx, n_rx, shape[1]))
    if not beam_pair:
        n_tx, n_rx = 1, shape[1]
    return power_tensor(values.astype(float), n_tx, n_rx, time=time,
                        delay=np.arange(shape[0]) * tap_spacing, attrs=attrs)
