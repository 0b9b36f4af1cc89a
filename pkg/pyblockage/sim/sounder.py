"""
Channel sounder emulation.

A scan sweeps every TX beam (outer loop) and every RX beam (inner loop) and
records one complex channel impulse response per beam pair. Repeating the
scan at a fixed period yields the 4-way measurement tensor
(delay, rx_beam, tx_beam, time).
"""
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
import xarray as xr
from scipy.constants import c as SPEED_OF_LIGHT
from tqdm import tqdm

from pyblockage.sim.array import make_codebook, pattern
from pyblockage.sim.blockage import path_blockage_loss
from pyblockage.sim.geometry import trace_paths

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScanConfig:
    '''
    Sounder settings.

    Parameters
    ----------
    n_delay_taps : int
        Taps per impulse response
    tap_spacing_ns : float
        Delay resolution
    scan_period_s : float
        Time between the starts of consecutive scans
    duration_s : float
        Length of the measurement
    carrier_ghz : float
        Carrier frequency
    snr_db : float or None
        SNR of the unblocked LOS peak tap. None disables noise.
    seed : int
        Seed of the noise streams
    '''
    n_delay_taps: int = 64
    tap_spacing_ns: float = 1.0
    scan_period_s: float = 0.003
    duration_s: float = 5.0
    carrier_ghz: float = 60.48
    snr_db: float = 30.0
    seed: int = 0

    def __post_init__(self):
        if self.n_delay_taps < 1:
            raise ValueError('n_delay_taps must be >= 1: {0}'
                             .format(self.n_delay_taps))
        for name in ('tap_spacing_ns', 'scan_period_s', 'carrier_ghz'):
            if getattr(self, name) <= 0:
                raise ValueError('{0} must be > 0: {1}'
                                 .format(name, getattr(self, name)))
        if self.duration_s < self.scan_period_s:
            raise ValueError('duration_s ({0}) must be at least one scan '
                             'period ({1})'.format(self.duration_s,
                                                   self.scan_period_s))

    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / (self.carrier_ghz * 1e9)

    @property
    def n_scans(self):
        # Guard against 0.3 / 0.1 = 2.9999...
        return int(np.floor(self.duration_s / self.scan_period_s + 1e-9))

    @property
    def timestamps(self):
        return np.arange(self.n_scans) * self.scan_period_s

    def to_attrs(self):
        attrs = asdict(self)
        if attrs['snr_db'] is None:
            del attrs['snr_db']
        return attrs

    @classmethod
    def from_attrs(cls, attrs):
        names = cls.__dataclass_fields__
        kwargs = {k: v for k, v in attrs.items() if k in names}
        kwargs.setdefault('snr_db', None)
        return cls(**kwargs)


@dataclass(frozen=True)
class CIR:
    taps: np.ndarray
    n_dropped: int = 0


class _PathTerm:
    '''Time-invariant part of one path's contribution.'''

    def __init__(self, path, config, tx_codebook, rx_codebook):
        self.path = path
        wavelength = config.wavelength
        delay = path.length_m / SPEED_OF_LIGHT
        self.tap = int(round(delay * 1e9 / config.tap_spacing_ns))
        self.in_window = 0 <= self.tap < config.n_delay_taps
        friis = wavelength / (4 * np.pi * path.length_m)
        refl = 10**(-path.reflection_loss_db / 20)
        phase = np.exp(-2j * np.pi * config.carrier_ghz * 1e9 * delay)
        self.base = friis * refl * phase
        self.g_tx = pattern(tx_codebook, path.aod_az)
        self.g_rx = pattern(rx_codebook, path.aoa_az)
        self.spatial = np.outer(self.g_rx, self.g_tx)

    def amplitude(self, blockers, t, wavelength):
        loss = path_blockage_loss(self.path, blockers, t, wavelength)
        return self.base * 10**(-loss / 20)


def _codebooks(tx_codebook, rx_codebook):
    if tx_codebook is None:
        tx_codebook = make_codebook()
    if rx_codebook is None:
        rx_codebook = make_codebook()
    return tx_codebook, rx_codebook


def reference_power(paths, config, tx_codebook=None, rx_codebook=None):
    '''
    Power of the unblocked LOS peak tap at its best beam pair.

    Falls back to the strongest path when the scene has no LOS path.
    '''
    tx_codebook, rx_codebook = _codebooks(tx_codebook, rx_codebook)
    terms = [_PathTerm(p, config, tx_codebook, rx_codebook) for p in paths]
    los = [term for term in terms if term.path.kind == 'LOS'] or terms
    return max(float(np.max(np.abs(term.base * term.spatial))**2)
               for term in los)


def noise_variance(paths, config, tx_codebook=None, rx_codebook=None):
    if config.snr_db is None:
        return 0.0
    p_ref = reference_power(paths, config, tx_codebook, rx_codebook)
    return p_ref / 10**(config.snr_db / 10)


def _complex_noise(rng, shape, variance):
    scale = np.sqrt(variance / 2)
    return scale * (rng.standard_normal(shape)
                    + 1j * rng.standard_normal(shape))


def synthesize_cir(scene, paths, tx_beam, rx_beam, t, config,
                   tx_codebook=None, rx_codebook=None, rng=None):
    '''
    Impulse response of one beam pair at time `t`.

    Parameters
    ----------
    scene : `pyblockage.sim.geometry.Scene`
    paths : list of `pyblockage.sim.geometry.PropagationPath`
    tx_beam, rx_beam : int
        Beam indices
    t : float
        Time in seconds
    config : `ScanConfig`
    tx_codebook, rx_codebook : `pyblockage.sim.array.Codebook`
        Defaults to the 12-beam codebook
    rng : `numpy.random.Generator`
        If given, complex Gaussian noise is added at the configured SNR

    Returns
    -------
    cir : `CIR`
        Taps and the number of paths dropped for falling outside the window
    '''
    tx_codebook, rx_codebook = _codebooks(tx_codebook, rx_codebook)
    taps = np.zeros(config.n_delay_taps, dtype=complex)
    dropped = 0
    for path in paths:
        term = _PathTerm(path, config, tx_codebook, rx_codebook)
        if not term.in_window:
            dropped += 1
            continue
        a = term.amplitude(scene.blockers, t, config.wavelength)
        taps[term.tap] += a * term.spatial[rx_beam, tx_beam]

    if rng is not None and config.snr_db is not None:
        var = noise_variance(paths, config, tx_codebook, rx_codebook)
        taps += _complex_noise(rng, taps.shape, var)

    return CIR(taps, dropped)


def _scan(terms, blockers, t, config, n_rx, n_tx, variance, rng):
    cube = np.zeros((config.n_delay_taps, n_rx, n_tx), dtype=complex)
    for term in terms:
        a = term.amplitude(blockers, t, config.wavelength)
        cube[term.tap] += a * term.spatial
    if variance > 0 and rng is not None:
        cube += _complex_noise(rng, cube.shape, variance)
    return cube


def _in_window(paths, config, tx_codebook, rx_codebook):
    terms = [_PathTerm(p, config, tx_codebook, rx_codebook) for p in paths]
    kept = [term for term in terms if term.in_window]
    n_dropped = len(terms) - len(kept)
    if n_dropped:
        msg = ('{0} path(s) fall outside the {1}-tap delay window and were '
               'dropped'.format(n_dropped, config.n_delay_taps))
        warnings.warn(msg)
        logger.warning(msg)
    return kept


def run_scan(scene, t, config, tx_codebook=None, rx_codebook=None,
             paths=None, rng=None):
    '''
    One full beam sweep at time `t`.

    Returns
    -------
    cube : `numpy.ndarray`
        Complex array of shape (n_delay_taps, n_rx, n_tx)
    '''
    tx_codebook, rx_codebook = _codebooks(tx_codebook, rx_codebook)
    if paths is None:
        paths = trace_paths(scene)
    terms = _in_window(paths, config, tx_codebook, rx_codebook)
    variance = noise_variance(paths, config, tx_codebook, rx_codebook)
    return _scan(terms, scene.blockers, t, config, len(rx_codebook),
                 len(tx_codebook), variance, rng)


def run_measurement(scene, config, tx_codebook=None, rx_codebook=None,
                    n_workers=1, progress=False):
    '''
    Repeat the beam sweep over the configured duration.

    Scan k is taken at k * scan_period_s and draws its noise from a stream
    seeded by (seed, k), so the result does not depend on `n_workers`.

    Parameters
    ----------
    scene : `pyblockage.sim.geometry.Scene`
    config : `ScanConfig`
    tx_codebook, rx_codebook : `pyblockage.sim.array.Codebook`
    n_workers : int
        Threads used to synthesize scans
    progress : bool
        Show a progress bar

    Returns
    -------
    tensor : `xarray.DataArray`
        Complex measurement tensor with dimensions
        (delay, rx_beam, tx_beam, time)
    '''
    tx_codebook, rx_codebook = _codebooks(tx_codebook, rx_codebook)
    paths = trace_paths(scene)
    terms = _in_window(paths, config, tx_codebook, rx_codebook)
    variance = noise_variance(paths, config, tx_codebook, rx_codebook)
    n_tx = len(tx_codebook)
    n_rx = len(rx_codebook)
    timestamps = config.timestamps

    logger.info('Simulating %d scans of %d beam pairs, %d paths',
                len(timestamps), n_tx * n_rx, len(terms))

    def one_scan(k):
        rng = np.random.default_rng([config.seed, k])
        return _scan(terms, scene.blockers, timestamps[k], config,
                     n_rx, n_tx, variance, rng)

    data = np.empty((config.n_delay_taps, n_rx, n_tx, len(timestamps)),
                    dtype=complex)
    indices = range(len(timestamps))
    with ThreadPoolExecutor(max_workers=max(n_workers, 1)) as pool:
        cubes = pool.map(one_scan, indices)
        for k, cube in tqdm(zip(indices, cubes), total=len(timestamps),
                            disable=not progress, desc='scans'):
            data[..., k] = cube

    attrs = config.to_attrs()
    attrs.update(n_tx=n_tx, n_rx=n_rx, scene=scene.name)
    return xr.DataArray(
        data,
        dims=('delay', 'rx_beam', 'tx_beam', 'time'),
        coords={'delay': np.arange(config.n_delay_taps)
                         * config.tap_spacing_ns,
                'rx_beam': np.arange(n_rx),
                'tx_beam': np.arange(n_tx),
                'time': timestamps},
        attrs=attrs)


def path_powers(scene, config, tx_codebook=None, rx_codebook=None):
    '''
    Noise-free received power of every path at its best beam pair.

    Returns
    -------
    powers : `xarray.DataArray`
        Dimensions (path, time); the `path` coordinate holds path ids and
        `delay_ns` the path delays.
    '''
    tx_codebook, rx_codebook = _codebooks(tx_codebook, rx_codebook)
    paths = trace_paths(scene)
    timestamps = config.timestamps
    data = np.empty((len(paths), len(timestamps)))
    for p, path in enumerate(paths):
        term = _PathTerm(path, config, tx_codebook, rx_codebook)
        peak = np.abs(term.base)**2 * np.max(term.spatial)**2
        for k, t in enumerate(timestamps):
            loss = path_blockage_loss(path, scene.blockers, t,
                                      config.wavelength)
            data[p, k] = peak * 10**(-loss / 10)

    return xr.DataArray(
        data, dims=('path', 'time'),
        coords={'path': [p.path_id for p in paths],
                'delay_ns': ('path', [p.delay_s * 1e9 for p in paths]),
                'time': timestamps})
