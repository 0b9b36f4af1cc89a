"""
Output sinks: JSON reports, CSV tables and SVG figures.

Nothing here changes analysis state. SVG files are rendered with the Agg
backend, a fixed hash salt and no creation date, so identical inputs give
identical bytes.
"""
import json
import logging
import os
import tempfile

import matplotlib
import numpy as np
import pandas as pd

from pyblockage.analysis.tensorops import _values, best_rx_per_tx, to_db
from pyblockage.sim.geometry import position_at

matplotlib.use('Agg')
from matplotlib import pyplot as plt  # noqa: E402

logger = logging.getLogger(__name__)

plt.rcParams['svg.hashsalt'] = 'pyblockage'
plt.rcParams['svg.fonttype'] = 'none'

TIME_COLUMN = 'time_s'


def _atomic_write(filename, text):
    directory = os.path.dirname(os.path.abspath(filename))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix='.pyblockage-')
    try:
        with os.fdopen(fd, 'w', newline='') as f:
            f.write(text)
        os.replace(tmp, filename)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return filename


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        obj = float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if np.isnan(obj) else ('inf' if obj > 0 else '-inf')
    return obj


def write_json(obj, filename):
    '''
    Write a JSON document with sorted keys.

    NumPy scalars and arrays are converted to plain values; non-finite
    floats become null, "inf" or "-inf".
    '''
    text = json.dumps(_jsonable(obj), sort_keys=True, indent=2) + '\n'
    _atomic_write(filename, text)
    logger.info('Wrote %s', filename)
    return filename


def read_json(filename):
    with open(filename) as f:
        return json.load(f)


def traces_frame(traces):
    '''
    Table of dB traces sharing one time base.

    Returns
    -------
    frame : `pandas.DataFrame`
        A `time_s` column followed by one column per trace
    '''
    if not traces:
        raise ValueError('At least one trace is required.')
    t = traces[0].timestamps
    columns = {TIME_COLUMN: t}
    for trace in traces:
        if not np.array_equal(trace.timestamps, t):
            raise ValueError('Trace {0} has a different time base.'
                             .format(trace.trace_id))
        columns[trace.trace_id] = trace.levels_db
    return pd.DataFrame(columns)


def export_traces_csv(traces, filename):
    '''Write traces as CSV: time in seconds, one dB column per trace.'''
    frame = traces_frame(traces)
    _atomic_write(filename, frame.to_csv(index=False, float_format='%.9f'))
    logger.info('Wrote %d traces to %s', len(traces), filename)
    return frame


def read_traces_csv(filename):
    '''
    Read a CSV written by `export_traces_csv`.

    Returns
    -------
    times : `numpy.ndarray`
    columns : dict
        Trace id to dB levels
    '''
    frame = pd.read_csv(filename)
    if TIME_COLUMN not in frame.columns:
        raise ValueError('{0} has no {1} column.'.format(filename,
                                                         TIME_COLUMN))
    times = frame[TIME_COLUMN].to_numpy(dtype=float)
    return times, {c: frame[c].to_numpy(dtype=float)
                   for c in frame.columns if c != TIME_COLUMN}


def export_events_csv(events, filename):
    '''One row per blockage event.'''
    columns = ['trace_id', 't_fade_start', 't_block_start', 't_block_end',
               't_rise_end', 't_fading', 't_blocked', 't_rising', 'depth_db']
    frame = pd.DataFrame([ev.to_dict() for ev in events], columns=columns)
    _atomic_write(filename, frame.to_csv(index=False, float_format='%.9f'))
    return frame


def export_markov_csv(model, filename):
    '''
    Transition probabilities and counts in long form.

    Per-path chains use states U and B; the joint chain uses the bit
    strings of the joint state (path 0 first).
    '''
    rows = []
    labels = ('U', 'B')
    for p, (P, C) in enumerate(zip(model.per_path, model.per_path_counts)):
        name = model.path_ids[p] if model.path_ids else str(p)
        for a in range(2):
            for b in range(2):
                rows.append(('path', name, labels[a], labels[b], P[a, b],
                             C[a, b]))
    n = model.n_paths
    for a in range(model.joint.shape[0]):
        for b in range(model.joint.shape[1]):
            rows.append(('joint', 'all', format(a, '0{0}b'.format(n)),
                         format(b, '0{0}b'.format(n)), model.joint[a, b],
                         model.joint_counts[a, b]))
    frame = pd.DataFrame(rows, columns=['chain', 'path', 'from', 'to',
                                        'probability', 'count'])
    _atomic_write(filename, frame.to_csv(index=False, float_format='%.9f'))
    return frame


def _save(fig, filename):
    fig.savefig(filename, format='svg', metadata={'Date': None})
    plt.close(fig)
    logger.info('Wrote %s', filename)
    return filename


def plot_traces(times, columns, filename, events=None, title=None):
    '''
    Line plot of dB traces against time.

    Parameters
    ----------
    times : `numpy.ndarray`
        Seconds
    columns : dict
        Label to dB levels
    filename : str
        SVG destination
    events : list of `pyblockage.analysis.blocktrace.BlockageEvent`
        Blocked intervals are shaded when given
    '''
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, levels in columns.items():
        ax.plot(times, levels, label=label, linewidth=1)
    for ev in events or []:
        ax.axvspan(ev.t_block_start, ev.t_block_end, color='0.85', zorder=0)
    ax.set_xlabel('Time (s)')
    ax.set_ylabel('Level (dB)')
    if title:
        ax.set_title(title)
    ax.legend(loc='lower right')
    ax.grid(True, linewidth=0.3)
    return _save(fig, filename)


def plot_heatmap(pm, filename, title='Received power per beam pair'):
    '''
    Heatmap of a (beam_pair, time) power matrix in dB.

    Returns
    -------
    filename : str
    cells : tuple
        (rows, columns) of the rendered image
    '''
    values = to_db(_values(pm))
    times = pm['time'].values if hasattr(pm, 'coords') else \
        np.arange(values.shape[1], dtype=float)
    return _image(values, times, 'Beam pair index', title, filename)


def plot_aod(pm, filename, n_tx=None, n_rx=None,
             title='Received power for each AoD index'):
    '''Heatmap of the best-RX power for every TX beam.'''
    aod = best_rx_per_tx(pm, n_tx=n_tx, n_rx=n_rx)
    return _image(to_db(aod.values), aod['time'].values, 'AoD index', title,
                  filename)


def _image(values, times, ylabel, title, filename):
    fig, ax = plt.subplots(figsize=(7, 4))
    dt = times[1] - times[0] if len(times) > 1 else 1.0
    image = ax.imshow(values, aspect='auto', origin='lower',
                      interpolation='nearest', cmap='viridis',
                      extent=(times[0], times[-1] + dt,
                              -0.5, values.shape[0] - 0.5))
    fig.colorbar(image, ax=ax, label='Power (dB)')
    cells = image.get_array().shape
    ax.set_xlabel('Time (s)')
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    _save(fig, filename)
    return filename, cells


def plot_scene(scene, paths, filename, times=None):
    '''
    Top view of a scene: room, walls, link, propagation paths and blocker
    trajectories.
    '''
    fig, ax = plt.subplots(figsize=(6, 5))
    lo = scene.room_min.xyz
    hi = scene.room_max.xyz
    ax.plot([lo[0], hi[0], hi[0], lo[0], lo[0]],
            [lo[1], lo[1], hi[1], hi[1], lo[1]], color='0.6', linewidth=0.8)
    for wall in scene.walls:
        a = wall.extent_min.xyz
        b = wall.extent_max.xyz
        ax.plot([a[0], b[0]], [a[1], b[1]], color='k', linewidth=2.5)
    for path in paths:
        xy = np.array([v.xyz[:2] for v in path.vertices])
        style = '-' if path.kind == 'LOS' else '--'
        ax.plot(xy[:, 0], xy[:, 1], style, linewidth=1, label=path.path_id)

    if times is None:
        end = max([b.trajectory.times[-1] for b in scene.blockers] + [0.0])
        times = np.linspace(0.0, end, 200)
    for blocker in scene.blockers:
        xy = np.array([position_at(blocker.trajectory, t).xyz[:2]
                       for t in times])
        ax.plot(xy[:, 0], xy[:, 1], ':', linewidth=1.5,
                label=blocker.name or 'blocker')
        ax.plot(xy[0, 0], xy[0, 1], 'o', markersize=3, color='0.3')

    ax.plot(*scene.tx.xyz[:2], '^', color='tab:red', label='TX')
    ax.plot(*scene.rx.xyz[:2], 'v', color='tab:blue', label='RX')
    ax.set_aspect('equal')
    ax.set_xlabel('x (m)')
    ax.set_ylabel('y (m)')
    ax.set_title(scene.name or 'scene')
    ax.legend(loc='upper left', fontsize='small', bbox_to_anchor=(1, 1))
    fig.tight_layout()
    return _save(fig, filename)
