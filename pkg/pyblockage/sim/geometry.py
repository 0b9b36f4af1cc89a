"""
Room geometry, moving blockers and specular ray tracing.

Positions are metres in a right-handed frame with z up. Azimuths are degrees,
counter-clockwise from +x in the horizontal plane.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

logger = logging.getLogger(__name__)

# Tolerance used when testing whether a reflection point lies on a wall
_EPS = 1e-9


class GeometryError(Exception):
    """Base class for geometric failures."""
    pass


class NoPathError(GeometryError):
    """No propagation path connects the transmitter and receiver."""
    pass


class DegenerateGeometryError(GeometryError):
    """An endpoint lies on a plane or two points coincide."""
    pass


@dataclass(frozen=True)
class Point:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.x, self.y, self.z])):
            raise ValueError('Point coordinates must be finite: ({0}, {1}, '
                             '{2})'.format(self.x, self.y, self.z))

    @classmethod
    def from_array(cls, xyz):
        x, y, z = (float(v) for v in xyz)
        return cls(x, y, z)

    @property
    def xyz(self):
        return np.array([self.x, self.y, self.z], dtype=float)

    def distance(self, other):
        return float(np.linalg.norm(self.xyz - other.xyz))


@dataclass(frozen=True)
class Trajectory:
    '''
    Piecewise-linear blocker trajectory.

    Parameters
    ----------
    waypoints : tuple of (float, `Point`)
        Time-ordered (t, position) pairs. Times are seconds and must be
        strictly increasing.
    '''
    waypoints: tuple

    def __post_init__(self):
        if len(self.waypoints) < 1:
            raise ValueError('A trajectory needs at least one waypoint.')
        times = np.array([t for t, _ in self.waypoints], dtype=float)
        if np.any(np.diff(times) <= 0):
            raise ValueError('Waypoint times must be strictly increasing: '
                             '{0}'.format(times.tolist()))

    @property
    def times(self):
        return np.array([t for t, _ in self.waypoints], dtype=float)

    @property
    def positions(self):
        return np.array([p.xyz for _, p in self.waypoints])


@dataclass(frozen=True)
class Blocker:
    trajectory: Trajectory
    width_m: float = 0.4
    height_m: float = 1.8
    name: str = ''

    def __post_init__(self):
        if self.width_m <= 0 or self.height_m <= 0:
            raise ValueError('Blocker dimensions must be positive: '
                             'width={0}, height={1}'
                             .format(self.width_m, self.height_m))


@dataclass(frozen=True)
class Wall:
    '''
    Planar vertical reflector.

    Parameters
    ----------
    point : `Point`
        Any point on the wall plane.
    normal : `Point`
        Unit normal pointing into the room.
    extent_min, extent_max : `Point`
        Corners of the axis-aligned box bounding the reflecting surface.
        Reflection points outside the box are rejected.
    reflection_loss_db : float
        Loss applied once per reflection.
    name : str
        Label used in path identifiers.
    '''
    point: Point
    normal: Point
    extent_min: Point
    extent_max: Point
    reflection_loss_db: float = 10.0
    name: str = ''

    def __post_init__(self):
        n = self.normal.xyz
        if abs(np.linalg.norm(n) - 1.0) > 1e-6:
            raise ValueError('Wall normal must have unit length: {0}'
                             .format(n.tolist()))
        if abs(n[2]) > 1e-9:
            raise ValueError('Only vertical walls are supported; normal z '
                             'component is {0}'.format(n[2]))
        span = self.extent_max.xyz - self.extent_min.xyz
        if np.any(span < 0) or np.count_nonzero(span > 0) < 2:
            raise ValueError('Wall extent must span two dimensions: '
                             '{0} to {1}'.format(self.extent_min,
                                                 self.extent_max))
        if self.reflection_loss_db < 0:
            raise ValueError('Reflection loss must be >= 0 dB.')

    def signed_distance(self, p):
        return float(np.dot(np.asarray(p) - self.point.xyz, self.normal.xyz))

    def mirror(self, p):
        '''Mirror image of the point (array) `p` across the wall plane.'''
        p = np.asarray(p, dtype=float)
        return p - 2 * self.signed_distance(p) * self.normal.xyz

    def contains(self, p):
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.extent_min.xyz - _EPS)
                    and np.all(p <= self.extent_max.xyz + _EPS))


@dataclass(frozen=True)
class Scene:
    room_min: Point
    room_max: Point
    tx: Point
    rx: Point
    tx_boresight_az: float = 0.0
    rx_boresight_az: float = 180.0
    walls: tuple = field(default_factory=tuple)
    blockers: tuple = field(default_factory=tuple)
    name: str = ''

    def __post_init__(self):
        for label, p in (('tx', self.tx), ('rx', self.rx)):
            if not self.inside(p):
                raise ValueError('{0} position {1} lies outside the room'
                                 .format(label, p))
        if self.tx.distance(self.rx) == 0:
            raise DegenerateGeometryError('TX and RX coincide.')
        for label, az in (('tx_boresight_az', self.tx_boresight_az),
                          ('rx_boresight_az', self.rx_boresight_az)):
            if not -180.0 <= az <= 180.0:
                raise ValueError('{0} must be in [-180, 180]: {1}'
                                 .format(label, az))

    def inside(self, p):
        xyz = p.xyz
        return bool(np.all(xyz >= self.room_min.xyz)
                    and np.all(xyz <= self.room_max.xyz))


@dataclass(frozen=True)
class PropagationPath:
    '''
    One TX to RX ray.

    `kind` is 'LOS' or 'Reflected'. For reflected paths `wall_id` indexes
    `Scene.walls` and `vertices` holds (TX, reflection point, RX).
    '''
    kind: str
    vertices: tuple
    length_m: float
    aod_az: float
    aoa_az: float
    reflection_loss_db: float = 0.0
    wall_id: int = None
    wall_name: str = ''
    wall_normal: Point = None

    @property
    def path_id(self):
        if self.kind == 'LOS':
            return 'LOS'
        return 'NLOS-{0}'.format(self.wall_name or self.wall_id)

    @property
    def delay_s(self):
        return self.length_m / SPEED_OF_LIGHT


@dataclass(frozen=True)
class Screen:
    center: Point
    width_m: float
    height_m: float
    normal: Point


def wrap_deg(angle):
    '''Wrap an angle in degrees to [-180, 180).'''
    return (np.asarray(angle) + 180.0) % 360.0 - 180.0


def azimuth_deg(vector):
    return float(np.degrees(np.arctan2(vector[1], vector[0])))


def position_at(trajectory, t):
    '''
    Position of a blocker at time `t`.

    Linear interpolation between waypoints, clamped to the first and last
    waypoint outside the time span.

    Parameters
    ----------
    trajectory : `Trajectory`
    t : float
        Time in seconds

    Returns
    -------
    position : `Point`
    '''
    times = trajectory.times
    xyz = trajectory.positions
    return Point(*(float(np.interp(t, times, xyz[:, i])) for i in range(3)))


def _make_path(kind, vertices, scene, loss_db=0.0, wall_id=None, name='',
               normal=None):
    pts = [v.xyz for v in vertices]
    length = sum(float(np.linalg.norm(b - a)) for a, b in zip(pts, pts[1:]))
    aod = wrap_deg(azimuth_deg(pts[1] - pts[0]) - scene.tx_boresight_az)
    aoa = wrap_deg(azimuth_deg(pts[-2] - pts[-1]) - scene.rx_boresight_az)
    return PropagationPath(kind=kind, vertices=tuple(vertices),
                           length_m=length, aod_az=float(aod),
                           aoa_az=float(aoa), reflection_loss_db=loss_db,
                           wall_id=wall_id, wall_name=name,
                           wall_normal=normal)


def trace_paths(scene):
    '''
    Trace the LOS path and every first-order specular wall reflection.

    Reflections are found with the image method: the receiver is mirrored
    across each wall and the TX-to-image segment intersected with the wall
    plane. A reflection is kept only if both ends lie on the room side of
    the wall and the reflection point falls inside the wall extent.

    Parameters
    ----------
    scene : `Scene`

    Returns
    -------
    paths : list of `PropagationPath`
        Sorted by length, ties broken by wall id with LOS first.
    '''
    tx = scene.tx.xyz
    rx = scene.rx.xyz
    paths = []
    if np.linalg.norm(rx - tx) > 0:
        paths.append((-1, _make_path('LOS', (scene.tx, scene.rx), scene)))

    for wall_id, wall in enumerate(scene.walls):
        d_tx = wall.signed_distance(tx)
        d_rx = wall.signed_distance(rx)
        if d_tx <= _EPS or d_rx <= _EPS:
            logger.debug('Wall %s: endpoint not on the room side', wall_id)
            continue

        image = wall.mirror(rx)
        seg = image - tx
        denom = np.dot(seg, wall.normal.xyz)
        s = -d_tx / denom
        if not 0 < s < 1:
            continue
        q = tx + s * seg
        if not wall.contains(q):
            logger.debug('Wall %s: reflection point %s outside extent',
                         wall_id, q)
            continue

        path = _make_path('Reflected', (scene.tx, Point.from_array(q),
                                        scene.rx),
                          scene, loss_db=wall.reflection_loss_db,
                          wall_id=wall_id, name=wall.name,
                          normal=wall.normal)
        paths.append((wall_id, path))

    if not paths:
        raise NoPathError('No path connects TX {0} and RX {1}'
                          .format(scene.tx, scene.rx))

    paths.sort(key=lambda item: (item[1].length_m, item[0]))
    return [p for _, p in paths]


def screen_from_xy(x, y, width_m, height_m, tx, rx):
    '''
    Vertical screen standing on the floor at (x, y), facing along the
    horizontal direction from `tx` to `rx` (arrays of shape (3,)).
    '''
    direction = np.asarray(rx, dtype=float) - np.asarray(tx, dtype=float)
    direction[2] = 0.0
    norm = np.linalg.norm(direction)
    if norm == 0:
        raise DegenerateGeometryError('TX and RX are vertically aligned; the '
                                      'screen orientation is undefined.')
    n = direction / norm
    return Screen(center=Point(float(x), float(y), height_m / 2.0),
                  width_m=width_m, height_m=height_m,
                  normal=Point.from_array(n))


def screen_at(blocker, t, tx, rx):
    '''
    Screen representing `blocker` at time `t` for the link `tx` to `rx`.

    Parameters
    ----------
    blocker : `Blocker`
    t : float
        Time in seconds
    tx, rx : `Point`
        Link end points

    Returns
    -------
    screen : `Screen`
        Centred on the blocker, bottom edge on the floor, top edge at the
        blocker height, normal along the horizontal TX to RX direction.
    '''
    p = position_at(blocker.trajectory, t)
    return screen_from_xy(p.x, p.y, blocker.width_m, blocker.height_m,
                          tx.xyz, rx.xyz)


def room_walls(room_min, room_max, reflection_loss_db=10.0):
    '''
    The four vertical walls of an axis-aligned box room.

    Returns
    -------
    walls : tuple of `Wall`
        Ordered x-min, x-max, y-min, y-max, with inward normals.
    '''
    lo = room_min.xyz
    hi = room_max.xyz
    walls = []
    for axis, label in ((0, 'x'), (1, 'y')):
        for side, value, sign in (('min', lo[axis], 1.0),
                                  ('max', hi[axis], -1.0)):
            normal = np.zeros(3)
            normal[axis] = sign
            e_lo = lo.copy()
            e_hi = hi.copy()
            e_lo[axis] = e_hi[axis] = value
            walls.append(Wall(point=Point.from_array(e_lo),
                              normal=Point.from_array(normal),
                              extent_min=Point.from_array(e_lo),
                              extent_max=Point.from_array(e_hi),
                              reflection_loss_db=reflection_loss_db,
                              name='{0}{1}'.format(label, side)))
    return tuple(walls)
