"""
Reshaping and reduction of measurement tensors.

The 4-way complex tensor (delay, rx_beam, tx_beam, time) is turned into a
3-way power tensor (delay, beam_pair, time) by interleaving the beam modes
as beam_pair = tx_beam * n_rx + rx_beam, matching the order in which the
sounder sweeps RX beams inside each TX beam.
"""
import logging

import numpy as np
import xarray as xr

logger = logging.getLogger(__name__)


def _values(x):
    if isinstance(x, xr.DataArray):
        return x.values
    return np.asarray(x)


def _time_coord(x, n):
    if isinstance(x, xr.DataArray) and 'time' in x.coords:
        return x['time'].values
    return np.arange(n, dtype=float)


def _attrs(x):
    return dict(x.attrs) if isinstance(x, xr.DataArray) else {}


def power(values):
    '''Squared magnitude, computed the same way everywhere.'''
    values = np.asarray(values)
    if np.iscomplexobj(values):
        return values.real**2 + values.imag**2
    return values**2


def power_tensor(data, n_tx, n_rx, time=None, delay=None, attrs=None):
    '''
    Wrap a (delay, beam_pair, time) power array as a labeled DataArray.
    '''
    n_delay, n_pairs, n_time = data.shape
    if n_pairs != n_tx * n_rx:
        raise ValueError('beam_pair size {0} does not equal n_tx * n_rx = '
                         '{1}'.format(n_pairs, n_tx * n_rx))
    pairs = np.arange(n_pairs)
    attrs = dict(attrs or {})
    attrs.update(n_tx=n_tx, n_rx=n_rx)
    if time is None:
        time = np.arange(n_time, dtype=float)
    if delay is None:
        delay = np.arange(n_delay) * attrs.get('tap_spacing_ns', 1.0)
    return xr.DataArray(data, dims=('delay', 'beam_pair', 'time'),
                        coords={'delay': delay,
                                'beam_pair': pairs,
                                'tx_beam': ('beam_pair', pairs // n_rx),
                                'rx_beam': ('beam_pair', pairs % n_rx),
                                'time': time},
                        attrs=attrs)


def partial_unfold(t4):
    '''
    Merge the two beam modes of a measurement tensor and take the power.

    Parameters
    ----------
    t4 : `xarray.DataArray` or `numpy.ndarray`
        Complex tensor ordered (delay, rx_beam, tx_beam, time)

    Returns
    -------
    t3 : `xarray.DataArray`
        Power tensor (delay, beam_pair, time) with
        t3[i, tx * n_rx + rx, k] = |t4[i, rx, tx, k]|**2
    '''
    values = _values(t4)
    if values.ndim != 4:
        raise ValueError('Expected a 4-way tensor, got {0} modes'
                         .format(values.ndim))
    n_delay, n_rx, n_tx, n_time = values.shape
    p = power(values).transpose(0, 2, 1, 3).reshape(n_delay, n_tx * n_rx,
                                                   n_time)
    delay = t4['delay'].values if isinstance(t4, xr.DataArray) else None
    return power_tensor(p, n_tx, n_rx, time=_time_coord(t4, n_time),
                        delay=delay, attrs=_attrs(t4))


def _beam_sizes(t3, n_tx=None, n_rx=None):
    attrs = _attrs(t3)
    n_tx = n_tx or attrs.get('n_tx')
    n_rx = n_rx or attrs.get('n_rx')
    n_pairs = _values(t3).shape[-2]
    if n_tx is None and n_rx is None:
        raise ValueError('Beam mode sizes are unknown; pass n_tx or n_rx.')
    if n_rx is None:
        n_rx = n_pairs // n_tx
    if n_tx is None:
        n_tx = n_pairs // n_rx
    if n_tx * n_rx != n_pairs:
        raise ValueError('{0} beam pairs cannot be split into {1} x {2}'
                         .format(n_pairs, n_tx, n_rx))
    return int(n_tx), int(n_rx)


def refold(t3, n_tx=None, n_rx=None):
    '''
    Inverse of `partial_unfold` on the power values.

    Returns
    -------
    p4 : `xarray.DataArray`
        Power tensor (delay, rx_beam, tx_beam, time)
    '''
    values = _values(t3)
    n_tx, n_rx = _beam_sizes(t3, n_tx, n_rx)
    n_delay, _, n_time = values.shape
    p4 = values.reshape(n_delay, n_tx, n_rx, n_time).transpose(0, 2, 1, 3)
    return xr.DataArray(p4, dims=('delay', 'rx_beam', 'tx_beam', 'time'),
                        coords={'rx_beam': np.arange(n_rx),
                                'tx_beam': np.arange(n_tx),
                                'time': _time_coord(t3, n_time)},
                        attrs=_attrs(t3))


def delay_power(t3):
    '''
    Total power over delay for each beam pair and scan.

    Uses compensated (Kahan) summation along the delay mode.

    Returns
    -------
    pm : `xarray.DataArray`
        Power matrix (beam_pair, time)
    '''
    values = _values(t3)
    total = np.zeros(values.shape[1:])
    comp = np.zeros(values.shape[1:])
    for row in values:
        y = row - comp
        s = total + y
        comp = (s - total) - y
        total = s

    coords = {'time': _time_coord(t3, values.shape[2])}
    if isinstance(t3, xr.DataArray):
        coords.update({name: t3[name] for name in ('beam_pair', 'tx_beam',
                                                    'rx_beam')
                       if name in t3.coords})
    return xr.DataArray(total, dims=('beam_pair', 'time'), coords=coords,
                        attrs=_attrs(t3))


def best_rx_per_tx(pm, n_tx=None, n_rx=None):
    '''
    Strongest RX beam for every TX beam (angle-of-departure view).

    Returns
    -------
    aod : `xarray.DataArray`
        (tx_beam, time) with aod[x, k] = max_r pm[x * n_rx + r, k]
    '''
    values = _values(pm)
    n_tx, n_rx = _beam_sizes(pm, n_tx, n_rx)
    n_time = values.shape[-1]
    best = values.reshape(n_tx, n_rx, n_time).max(axis=1)
    return xr.DataArray(best, dims=('tx_beam', 'time'),
                        coords={'tx_beam': np.arange(n_tx),
                                'time': _time_coord(pm, n_time)},
                        attrs=_attrs(pm))


def best_tx_per_rx(pm, n_tx=None, n_rx=None):
    '''
    Strongest TX beam for every RX beam (angle-of-arrival view).
    '''
    values = _values(pm)
    n_tx, n_rx = _beam_sizes(pm, n_tx, n_rx)
    n_time = values.shape[-1]
    best = values.reshape(n_tx, n_rx, n_time).max(axis=0)
    return xr.DataArray(best, dims=('rx_beam', 'time'),
                        coords={'rx_beam': np.arange(n_rx),
                                'time': _time_coord(pm, n_time)},
                        attrs=_attrs(pm))


def full_unfold(t3):
    '''
    Merge delay and beam pair into one mode: row i * J + j.

    Returns
    -------
    matrix : `numpy.ndarray`
        Shape (I * J, K)
    '''
    values = _values(t3)
    n_delay, n_pairs, n_time = values.shape
    return values.reshape(n_delay * n_pairs, n_time)


def matricize(x, mode):
    '''
    Mode-`mode` unfolding of a 3-way array.

    The remaining modes map to the columns in ascending order with the
    lowest one varying fastest, so for a rank-one tensor a o b o c,
    matricize(x, 0) == outer(a, khatri_rao(c, b)[:, 0]).
    '''
    x = _values(x)
    return np.reshape(np.moveaxis(x, mode, 0), (x.shape[mode], -1),
                      order='F')


def khatri_rao(a, b):
    '''
    Column-wise Kronecker product; row index i_a * rows(b) + i_b.
    '''
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError('Factors need the same number of columns: {0} vs {1}'
                         .format(a.shape[1], b.shape[1]))
    return (a[:, None, :] * b[None, :, :]).reshape(-1, a.shape[1])


_MTTKRP = {0: 'ijk,jr,kr->ir',
           1: 'ijk,ir,kr->jr',
           2: 'ijk,ir,jr->kr'}


def mttkrp(x, factors, mode):
    '''
    Matricized tensor times Khatri-Rao product of the other factors.

    Equal to matricize(x, mode) @ khatri_rao(later, earlier) where `later`
    and `earlier` are the two factors other than `mode` in descending mode
    order, computed without forming either operand.
    '''
    x = _values(x)
    others = [f for m, f in enumerate(factors) if m != mode]
    return np.einsum(_MTTKRP[mode], x, *others, optimize=True)


def to_db(values, floor_db=-200.0):
    '''10*log10 of power values, clamped at `floor_db`.'''
    values = np.asarray(values, dtype=float)
    with np.errstate(divide='ignore'):
        db = 10 * np.log10(values)
    return np.maximum(db, floor_db)
