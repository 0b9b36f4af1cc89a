"""
Scene files.

A scene file is a JSON document describing the room, the link, the walls,
the blockers, the two codebooks and the sounder settings::

    {
      "name": "living_room",
      "room": {"min": [0, 0, 0], "max": [6, 5, 3]},
      "tx": {"position": [1, 2.5, 1], "boresight_az": 0},
      "rx": {"position": [5, 2.5, 1], "boresight_az": 180},
      "walls": [{"room_wall": "ymin", "reflection_loss_db": 10}],
      "blockers": [{"name": "walker", "width_m": 0.4, "height_m": 1.8,
                    "waypoints": [[0.0, [3, 0.8, 0]], [4.0, [3, 4.2, 0]]]}],
      "codebook": {"tx": {"n": 12}, "rx": {"n": 12}},
      "scan": {"duration_s": 5.0, "snr_db": 30},
      "seed": 0
    }

A wall is either a reference to one of the four walls of the room box
(`room_wall`: xmin, xmax, ymin or ymax) or an explicit plane with
`point`, `normal`, `extent_min` and `extent_max`. Unknown keys are
rejected so that typos do not go unnoticed.
"""
import json
import logging
import os
from dataclasses import dataclass, replace

from pyblockage.sim.array import make_codebook
from pyblockage.sim.geometry import (Blocker, GeometryError, Point, Scene,
                                     Trajectory, Wall, room_walls)
from pyblockage.sim.sounder import ScanConfig

logger = logging.getLogger(__name__)

SCENE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                         'scenes')

_TOP_KEYS = {'name', 'description', 'room', 'tx', 'rx', 'walls', 'blockers',
             'codebook', 'scan', 'seed'}
_CODEBOOK_KEYS = {'n', 'range_deg', 'peak_gain_dbi', 'hpbw_deg',
                  'sidelobe_floor_db'}
_SCAN_KEYS = {'n_delay_taps', 'tap_spacing_ns', 'scan_period_s',
              'duration_s', 'carrier_ghz', 'snr_db'}


class SceneFileError(Exception):
    """Raised when a scene file does not describe a valid scene"""

    def __init__(self, path, message):
        self.path = path
        super().__init__('{0}: {1}'.format(path, message))


@dataclass(frozen=True)
class SceneFile:
    '''Everything a scene file configures.'''
    scene: Scene
    config: ScanConfig
    tx_codebook: object
    rx_codebook: object
    codebook_params: dict


def bundled_scene(name):
    '''
    Path of a scene file shipped with the package.

    Parameters
    ----------
    name : str
        File name with or without the .json extension
    '''
    if not name.endswith('.json'):
        name += '.json'
    path = os.path.join(SCENE_DIR, name)
    if not os.path.isfile(path):
        raise FileNotFoundError('No bundled scene named {0}. Available: {1}'
                                .format(name, list_scenes()))
    return path


def list_scenes():
    return sorted(os.path.splitext(f)[0] for f in os.listdir(SCENE_DIR)
                  if f.endswith('.json'))


def _object(value, path, allowed, required=()):
    if not isinstance(value, dict):
        raise SceneFileError(path, 'expected an object')
    unknown = set(value) - set(allowed)
    if unknown:
        raise SceneFileError('{0}.{1}'.format(path, sorted(unknown)[0]),
                             'unknown field')
    for key in required:
        if key not in value:
            raise SceneFileError('{0}.{1}'.format(path, key),
                                 'missing required field')
    return value


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SceneFileError(path, 'expected a number, got {0!r}'
                             .format(value))
    return float(value)


def _point(value, path):
    if not isinstance(value, list) or len(value) != 3:
        raise SceneFileError(path, 'expected [x, y, z]')
    return Point(*(_number(v, '{0}[{1}]'.format(path, i))
                   for i, v in enumerate(value)))


def _endpoint(doc, key):
    path = '$.{0}'.format(key)
    if key not in doc:
        raise SceneFileError(path, 'missing required field')
    obj = _object(doc[key], path, {'position', 'boresight_az'},
                  required=('position',))
    position = _point(obj['position'], path + '.position')
    default = 0.0 if key == 'tx' else 180.0
    az = _number(obj.get('boresight_az', default), path + '.boresight_az')
    return position, az


def _walls(doc, room_min, room_max):
    items = doc.get('walls', [])
    if not isinstance(items, list):
        raise SceneFileError('$.walls', 'expected a list')
    box = {w.name: w for w in room_walls(room_min, room_max)}
    walls = []
    for i, item in enumerate(items):
        path = '$.walls[{0}]'.format(i)
        if isinstance(item, dict) and 'room_wall' in item:
            obj = _object(item, path, {'room_wall', 'reflection_loss_db',
                                       'name'})
            label = obj['room_wall']
            if label not in box:
                raise SceneFileError(path + '.room_wall',
                                     'expected one of {0}'
                                     .format(sorted(box)))
            wall = box[label]
            loss = _number(obj.get('reflection_loss_db', 10.0),
                           path + '.reflection_loss_db')
            wall = replace(wall, reflection_loss_db=loss,
                           name=obj.get('name', label))
        else:
            obj = _object(item, path, {'point', 'normal', 'extent_min',
                                       'extent_max', 'reflection_loss_db',
                                       'name'},
                          required=('point', 'normal', 'extent_min',
                                    'extent_max'))
            try:
                wall = Wall(point=_point(obj['point'], path + '.point'),
                            normal=_point(obj['normal'], path + '.normal'),
                            extent_min=_point(obj['extent_min'],
                                              path + '.extent_min'),
                            extent_max=_point(obj['extent_max'],
                                              path + '.extent_max'),
                            reflection_loss_db=_number(
                                obj.get('reflection_loss_db', 10.0),
                                path + '.reflection_loss_db'),
                            name=obj.get('name', 'wall{0}'.format(i)))
            except ValueError as e:
                raise SceneFileError(path, str(e)) from e
        walls.append(wall)
    return tuple(walls)


def _blockers(doc):
    items = doc.get('blockers', [])
    if not isinstance(items, list):
        raise SceneFileError('$.blockers', 'expected a list')
    blockers = []
    for i, item in enumerate(items):
        path = '$.blockers[{0}]'.format(i)
        obj = _object(item, path, {'name', 'width_m', 'height_m',
                                   'waypoints'}, required=('waypoints',))
        waypoints = obj['waypoints']
        if not isinstance(waypoints, list) or not waypoints:
            raise SceneFileError(path + '.waypoints',
                                 'expected a non-empty list')
        pairs = []
        for k, wp in enumerate(waypoints):
            wp_path = '{0}.waypoints[{1}]'.format(path, k)
            if not isinstance(wp, list) or len(wp) != 2:
                raise SceneFileError(wp_path, 'expected [t, [x, y, z]]')
            pairs.append((_number(wp[0], wp_path + '[0]'),
                          _point(wp[1], wp_path + '[1]')))
        try:
            blockers.append(Blocker(
                trajectory=Trajectory(tuple(pairs)),
                width_m=_number(obj.get('width_m', 0.4), path + '.width_m'),
                height_m=_number(obj.get('height_m', 1.8),
                                 path + '.height_m'),
                name=obj.get('name', 'blocker{0}'.format(i))))
        except ValueError as e:
            raise SceneFileError(path, str(e)) from e
    return tuple(blockers)


def _codebooks(doc):
    obj = _object(doc.get('codebook', {}), '$.codebook', {'tx', 'rx'})
    params = {}
    books = {}
    for side in ('tx', 'rx'):
        path = '$.codebook.{0}'.format(side)
        kwargs = dict(_object(obj.get(side, {}), path, _CODEBOOK_KEYS))
        for key, value in kwargs.items():
            _number(value, '{0}.{1}'.format(path, key))
        if 'n' in kwargs:
            if not isinstance(kwargs['n'], int) or isinstance(kwargs['n'],
                                                              bool):
                raise SceneFileError(path + '.n', 'expected an integer')
        try:
            books[side] = make_codebook(**kwargs)
        except ValueError as e:
            raise SceneFileError(path, str(e)) from e
        params[side] = books[side].to_dict()
    return books['tx'], books['rx'], params


def _scan_config(doc):
    obj = _object(doc.get('scan', {}), '$.scan', _SCAN_KEYS)
    kwargs = {}
    for key, value in obj.items():
        if key == 'snr_db' and value is None:
            kwargs[key] = None
            continue
        kwargs[key] = _number(value, '$.scan.' + key)
    if 'n_delay_taps' in kwargs:
        if kwargs['n_delay_taps'] != int(kwargs['n_delay_taps']):
            raise SceneFileError('$.scan.n_delay_taps', 'expected an integer')
        kwargs['n_delay_taps'] = int(kwargs['n_delay_taps'])
    seed = doc.get('seed', 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise SceneFileError('$.seed', 'expected a non-negative integer')
    try:
        return ScanConfig(seed=seed, **kwargs)
    except ValueError as e:
        raise SceneFileError('$.scan', str(e)) from e


def parse_scene(doc, name=''):
    '''
    Validate a decoded scene document.

    Parameters
    ----------
    doc : dict
        Decoded JSON
    name : str
        Scene name used when the document has none

    Returns
    -------
    scene_file : `SceneFile`

    Raises
    ------
    SceneFileError
        With the JSON path of the first offending field
    '''
    _object(doc, '$', _TOP_KEYS, required=('room', 'tx', 'rx'))
    room = _object(doc['room'], '$.room', {'min', 'max'},
                   required=('min', 'max'))
    room_min = _point(room['min'], '$.room.min')
    room_max = _point(room['max'], '$.room.max')
    if any(lo >= hi for lo, hi in zip(room_min.xyz, room_max.xyz)):
        raise SceneFileError('$.room', 'min must be below max on every axis')

    tx, tx_az = _endpoint(doc, 'tx')
    rx, rx_az = _endpoint(doc, 'rx')
    walls = _walls(doc, room_min, room_max)
    blockers = _blockers(doc)
    tx_codebook, rx_codebook, params = _codebooks(doc)
    config = _scan_config(doc)

    try:
        scene = Scene(room_min=room_min, room_max=room_max, tx=tx, rx=rx,
                      tx_boresight_az=tx_az, rx_boresight_az=rx_az,
                      walls=walls, blockers=blockers,
                      name=doc.get('name', name))
    except (ValueError, GeometryError) as e:
        raise SceneFileError('$', str(e)) from e

    logger.info('Scene %s: %d walls, %d blockers', scene.name, len(walls),
                len(blockers))
    return SceneFile(scene, config, tx_codebook, rx_codebook, params)


def load_scene(filename):
    '''
    Read and validate a scene file.

    Parameters
    ----------
    filename : str
        Path to a JSON scene file, or the name of a bundled scene

    Returns
    -------
    scene_file : `SceneFile`
    '''
    if not os.path.isfile(filename):
        filename = bundled_scene(filename)
    with open(filename) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise SceneFileError('$', 'invalid JSON: {0}'.format(e)) from e
    name = os.path.splitext(os.path.basename(filename))[0]
    return parse_scene(doc, name=name)
