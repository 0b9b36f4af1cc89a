"""
Beam codebooks of the phased arrays.

Each beam has a Gaussian mainlobe in dB around its steering angle, clipped
from below by a flat sidelobe floor.
"""
import logging
from dataclasses import dataclass

import numpy as np

from pyblockage.sim.geometry import wrap_deg

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Beam:
    steer_az: float
    peak_gain_dbi: float
    hpbw_deg: float
    sidelobe_floor_db: float


@dataclass(frozen=True)
class BeamGain:
    amplitude: float

    @property
    def db(self):
        return 20 * np.log10(self.amplitude)


@dataclass(frozen=True)
class Codebook:
    beams: tuple

    def __len__(self):
        return len(self.beams)

    @property
    def steering(self):
        return np.array([b.steer_az for b in self.beams])

    def to_dict(self):
        b = self.beams[0]
        spread = float(np.max(np.abs(self.steering)))
        return {'n': len(self.beams),
                'range_deg': spread,
                'peak_gain_dbi': b.peak_gain_dbi,
                'hpbw_deg': b.hpbw_deg,
                'sidelobe_floor_db': b.sidelobe_floor_db}


def make_codebook(n=12, range_deg=45.0, peak_gain_dbi=23.0, hpbw_deg=30.0,
                  sidelobe_floor_db=-20.0):
    '''
    Build a codebook of `n` beams steered uniformly over +/- `range_deg`.

    Parameters
    ----------
    n : int
        Number of beams. A single beam is steered to 0 degrees.
    range_deg : float
        Half-width of the steering range in degrees
    peak_gain_dbi : float
        Mainlobe peak gain
    hpbw_deg : float
        Half-power beamwidth
    sidelobe_floor_db : float
        Floor relative to the peak (negative)

    Returns
    -------
    codebook : `Codebook`
    '''
    if n < 1:
        raise ValueError('Codebook size must be >= 1: {0}'.format(n))
    if not range_deg > 0:
        raise ValueError('Steering range must be > 0: {0}'.format(range_deg))
    if hpbw_deg <= 0:
        raise ValueError('HPBW must be > 0: {0}'.format(hpbw_deg))
    if sidelobe_floor_db >= 0:
        raise ValueError('Sidelobe floor must be negative relative to the '
                         'peak: {0}'.format(sidelobe_floor_db))

    if n == 1:
        steering = np.zeros(1)
    else:
        steering = np.linspace(-range_deg, range_deg, n)

    return Codebook(tuple(Beam(float(s), peak_gain_dbi, hpbw_deg,
                               sidelobe_floor_db) for s in steering))


def _gain_db(beam_steer, peak, hpbw, floor, azimuth):
    delta = wrap_deg(np.asarray(azimuth) - beam_steer)
    rel = -3.0 * (2.0 * delta / hpbw)**2
    return peak + np.maximum(rel, floor)


def gain(codebook, beam_index, azimuth_deg):
    '''
    Field gain of one beam toward a boresight-relative azimuth.

    Parameters
    ----------
    codebook : `Codebook`
    beam_index : int
    azimuth_deg : float

    Returns
    -------
    gain : `BeamGain`
        Linear amplitude, 10**(dB/20)
    '''
    if not 0 <= beam_index < len(codebook):
        raise IndexError('Beam index {0} outside codebook of size {1}'
                         .format(beam_index, len(codebook)))
    b = codebook.beams[beam_index]
    db = _gain_db(b.steer_az, b.peak_gain_dbi, b.hpbw_deg,
                  b.sidelobe_floor_db, azimuth_deg)
    return BeamGain(float(10**(db / 20)))


def pattern(codebook, azimuth_deg):
    '''
    Field amplitudes of every beam toward one azimuth.

    Returns
    -------
    amplitudes : `numpy.ndarray`
        Shape (len(codebook),)
    '''
    steer = codebook.steering
    peak = np.array([b.peak_gain_dbi for b in codebook.beams])
    hpbw = np.array([b.hpbw_deg for b in codebook.beams])
    floor = np.array([b.sidelobe_floor_db for b in codebook.beams])
    db = _gain_db(steer, peak, hpbw, floor, azimuth_deg)
    return 10**(db / 20)
