"""
Knife-edge diffraction loss of finite screens standing on a link.

A blocker is a vertical rectangular screen. Its loss is the double
knife-edge form in which each of the four edges contributes an arctangent
Fresnel term, the two width edges and the two height edges being combined
separately and multiplied.
"""
import logging
from dataclasses import dataclass

import numpy as np

from pyblockage.sim.geometry import (DegenerateGeometryError, position_at,
                                     screen_from_xy)

logger = logging.getLogger(__name__)

# Screens farther than this many first Fresnel radii from the ray are ignored
GATE_FRESNEL_RADII = 10.0
_EPS = 1e-12


@dataclass(frozen=True)
class AttenuationSample:
    t: float
    path_id: str
    loss_db: float


def fresnel_radius(d1, d2, wavelength):
    '''
    Radius of the first Fresnel zone at distances `d1` and `d2` from the
    link ends.
    '''
    return np.sqrt(wavelength * d1 * d2 / (d1 + d2))


def _edge_term(d1, d2, r, wavelength, shadowed):
    excess = max(d1 + d2 - r, 0.0)
    arg = np.pi / 2 * np.sqrt(np.pi / wavelength * excess)
    if not shadowed:
        arg = -arg
    return np.arctan(arg) / np.pi


def ked_loss(screen, tx, rx, wavelength):
    '''
    Diffraction loss of a screen on the straight segment from `tx` to `rx`.

    Parameters
    ----------
    screen : `pyblockage.sim.geometry.Screen`
    tx, rx : `numpy.ndarray`
        Segment end points, shape (3,)
    wavelength : float
        Carrier wavelength in metres

    Returns
    -------
    loss_db : float
        Non-negative loss. Exactly 0 when the screen plane does not separate
        the end points or the segment misses the screen by more than
        `GATE_FRESNEL_RADII` Fresnel radii in either dimension. Also 0 when
        an end point lies in the screen plane well clear of the screen.

    Raises
    ------
    DegenerateGeometryError
        An end point lies on the screen, within the gate.
    '''
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    c = screen.center.xyz
    n = screen.normal.xyz
    u = np.array([-n[1], n[0], 0.0])
    half_w = screen.width_m / 2.0
    h = screen.height_m

    a = np.dot(tx - c, n)
    b = np.dot(rx - c, n)
    if abs(a) < _EPS or abs(b) < _EPS:
        # Only an end point on (or gate-close to) the screen itself is fatal
        link = np.linalg.norm(rx - tx)
        gate = GATE_FRESNEL_RADII * fresnel_radius(link / 2, link / 2,
                                                   wavelength)
        for end, dist in ((tx, a), (rx, b)):
            if abs(dist) >= _EPS:
                continue
            off_w = max(abs(np.dot(end - c, u)) - half_w, 0.0)
            off_h = max(end[2] - h, -end[2], 0.0)
            if off_w <= gate and off_h <= gate:
                raise DegenerateGeometryError('Link end point lies on the '
                                              'screen.')
        return 0.0
    if a * b > 0:
        return 0.0

    # Where the segment crosses the screen plane
    s = a / (a - b)
    p0 = tx + s * (rx - tx)
    d1 = np.linalg.norm(p0 - tx)
    d2 = np.linalg.norm(rx - p0)
    r_f = fresnel_radius(d1, d2, wavelength)
    u0 = np.dot(p0 - c, u)
    z0 = p0[2]

    miss_w = max(abs(u0) - half_w, 0.0)
    miss_h = max(z0 - h, -z0, 0.0)
    if miss_w > GATE_FRESNEL_RADII * r_f or miss_h > GATE_FRESNEL_RADII * r_f:
        return 0.0

    # Top view: width edges
    tx_h = tx[:2]
    rx_h = rx[:2]
    r_top = np.linalg.norm(rx_h - tx_h)
    f_w = 0.0
    for sign in (-1.0, 1.0):
        edge = c[:2] + sign * half_w * u[:2]
        shadowed = (u0 > -half_w) if sign < 0 else (u0 < half_w)
        f_w += _edge_term(np.linalg.norm(edge - tx_h),
                          np.linalg.norm(edge - rx_h), r_top, wavelength,
                          shadowed)

    # Side view: bottom and top edges, horizontal coordinate along the normal
    tx_s = np.array([a, tx[2]])
    rx_s = np.array([b, rx[2]])
    r_side = np.linalg.norm(rx_s - tx_s)
    f_h = 0.0
    for z_edge, shadowed in ((0.0, z0 > 0.0), (h, z0 < h)):
        edge = np.array([0.0, z_edge])
        f_h += _edge_term(np.linalg.norm(edge - tx_s),
                          np.linalg.norm(edge - rx_s), r_side, wavelength,
                          shadowed)

    loss = -20 * np.log10(1 - f_h * f_w)
    return float(max(loss, 0.0))


def _mirror(p, q, normal):
    return p - 2 * np.dot(p - q, normal) * normal


def path_blockage_loss(path, blockers, t, wavelength):
    '''
    Total blockage loss of one path at time `t`, summed over blockers.

    Reflected paths are unfolded by mirroring the receiver across the wall.
    Real blockers are tested against the transmitter side of the unfolded
    segment and mirrored blockers against the image side.

    Parameters
    ----------
    path : `pyblockage.sim.geometry.PropagationPath`
    blockers : list of `pyblockage.sim.geometry.Blocker`
    t : float
        Time in seconds
    wavelength : float
        Carrier wavelength in metres

    Returns
    -------
    loss_db : float
    '''
    tx = path.vertices[0].xyz
    rx = path.vertices[-1].xyz
    if path.kind == 'LOS':
        total = 0.0
        for blocker in blockers:
            p = position_at(blocker.trajectory, t)
            screen = screen_from_xy(p.x, p.y, blocker.width_m,
                                    blocker.height_m, tx, rx)
            total += ked_loss(screen, tx, rx, wavelength)
        return total

    q = path.vertices[1].xyz
    normal = path.wall_normal.xyz
    image = _mirror(rx, q, normal)
    direction = (image - tx)[:2]
    length2 = np.dot(direction, direction)
    s_q = np.dot((q - tx)[:2], direction) / length2

    total = 0.0
    for blocker in blockers:
        p = position_at(blocker.trajectory, t).xyz
        p_img = _mirror(p, q, normal)
        for xyz, on_tx_side in ((p, True), (p_img, False)):
            s_b = np.dot((xyz - tx)[:2], direction) / length2
            if (s_b <= s_q) != on_tx_side:
                continue
            screen = screen_from_xy(xyz[0], xyz[1], blocker.width_m,
                                    blocker.height_m, tx, image)
            total += ked_loss(screen, tx, image, wavelength)
    return total


def attenuation_trace(path, blockers, times, wavelength):
    '''
    Blockage loss of one path over a sequence of times.

    Returns
    -------
    samples : list of `AttenuationSample`
    '''
    return [AttenuationSample(float(t), path.path_id,
                              path_blockage_loss(path, blockers, t,
                                                 wavelength))
            for t in times]
