"""
Command-line pipeline.

    pyblockage simulate     scene -> 4-way complex tensor file
    pyblockage preprocess   4-way tensor -> 3-way power tensor file
    pyblockage decompose    3-way tensor -> PARAFAC model JSON
    pyblockage baseline-pca 3-way tensor -> PCA baseline JSON
    pyblockage analyze      model JSON -> blockage report JSON (+ CSV)
    pyblockage plot         CSV, tensor or scene -> SVG
"""
import argparse
import logging
import os
import sys
from dataclasses import replace

import numpy as np

import pyblockage
from pyblockage.analysis import blocktrace, parafac, tensorops
from pyblockage.data import export
from pyblockage.data.scene import SceneFileError, load_scene
from pyblockage.data.tensorfile import TensorFileError, read_tensor, \
    write_tensor
from pyblockage.sim.geometry import GeometryError, trace_paths
from pyblockage.sim.sounder import path_powers, run_measurement

logger = logging.getLogger(__name__)

PROG = 'pyblockage'


class PipelineError(Exception):
    """Raised when pipeline inputs do not fit together"""
    pass


def _output_path(path):
    root = pyblockage.config.get('output_root')
    if root is not None and not os.path.isabs(path):
        os.makedirs(root, exist_ok=True)
        path = os.path.join(root, path)
    return path


def _sibling(path, suffix):
    stem, _ = os.path.splitext(path)
    return '{0}_{1}.csv'.format(stem, suffix)


def _power_tensor(filename):
    tensor = read_tensor(filename)
    if tensor.ndim == 4:
        logger.info('%s holds a complex tensor; taking the power', filename)
        tensor = tensorops.partial_unfold(tensor)
    return tensor


def simulate(args):
    scene_file = load_scene(args.scene)
    config = scene_file.config
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    tensor = run_measurement(scene_file.scene, config,
                             scene_file.tx_codebook, scene_file.rx_codebook,
                             n_workers=args.n_workers,
                             progress=args.progress)
    write_tensor(_output_path(args.out), tensor)

    if args.truth:
        powers = path_powers(scene_file.scene, config,
                             scene_file.tx_codebook, scene_file.rx_codebook)
        traces = [blocktrace.GainTrace(str(pid), powers['time'].values,
                                       tensorops.to_db(powers.sel(path=pid)
                                                       .values))
                  for pid in powers['path'].values]
        export.export_traces_csv(traces, _output_path(args.truth))


def preprocess(args):
    tensor = read_tensor(args.infile)
    if tensor.ndim != 4:
        raise PipelineError('{0} is already a 3-way power tensor.'
                            .format(args.infile))
    write_tensor(_output_path(args.out), tensorops.partial_unfold(tensor))


def decompose(args):
    t3 = _power_tensor(args.infile)
    opts = parafac.AlsOptions(max_iters=args.max_iters, tol=args.tol,
                              init=args.init, nonneg=args.nonneg,
                              seed=args.seed)
    model = parafac.cp_als(t3, args.rank, opts)
    doc = model.to_dict()
    doc['options'] = {'max_iters': opts.max_iters, 'tol': opts.tol,
                      'init': opts.init, 'nonneg': opts.nonneg,
                      'seed': opts.seed}
    doc['dominant_delay_ns'] = (model.dominant_delay()
                                * model.tap_spacing_ns).tolist()
    doc['dominant_beam_pair'] = [list(p) for p in model.dominant_beam_pair()]
    export.write_json(doc, _output_path(args.out))
    print('rank {0}: relative error {1:.3e} after {2} sweeps{3}'
          .format(model.L, model.fit, model.iterations,
                  '' if model.converged else ' (not converged)'))


def baseline_pca(args):
    t3 = _power_tensor(args.infile)
    model = parafac.pca_baseline(t3, args.rank)
    doc = {'L': model.L,
           'explained': model.explained,
           'singular_values': model.singular_values,
           'scores': {'shape': list(model.scores.shape),
                      'data': model.scores.ravel()},
           'timestamps': t3['time'].values}
    export.write_json(doc, _output_path(args.out))
    print('rank {0}: {1:.4f} of the energy explained'
          .format(model.L, float(np.sum(model.explained))))


def analyze(args):
    model = parafac.CPModel.from_dict(export.read_json(args.model))
    traces = blocktrace.gain_trajectories(model, floor_db=args.floor_db)

    components = []
    states = []
    events = []
    delays = model.dominant_delay() * model.tap_spacing_ns
    pairs = model.dominant_beam_pair()
    for ell, trace in enumerate(traces):
        segmented = blocktrace.fit_piecewise(trace, args.max_rmse_db)
        seq = blocktrace.label_states(
            trace, args.threshold_db, args.hysteresis_db,
            segments=segmented if args.segment_labels else None)
        found = blocktrace.detect_events(trace, seq)
        states.append(seq)
        events.extend(found)
        components.append({
            'trace_id': trace.trace_id,
            'dominant_delay_ns': delays[ell],
            'dominant_beam_pair': list(pairs[ell]),
            'unblocked_ref_db': seq.unblocked_ref_db,
            'blocked_fraction': float(np.mean(seq.states)),
            'n_segments': len(segmented.segments),
            'events': [ev.to_dict() for ev in found]})

    markov = blocktrace.fit_markov(states, slot_duration=args.slot_duration)
    ever, fraction, overlap = blocktrace.joint_outage(states)
    report = {'model': os.path.basename(args.model),
              'settings': {'threshold_db': args.threshold_db,
                           'hysteresis_db': args.hysteresis_db,
                           'max_rmse_db': args.max_rmse_db,
                           'floor_db': args.floor_db,
                           'segment_labels': args.segment_labels},
              'components': components,
              'markov': dict(markov.to_dict(),
                             stationary=markov.stationary(),
                             mean_durations_s=markov.mean_durations()),
              'joint_outage': {'ever_all_blocked': ever,
                               'all_blocked_fraction': fraction,
                               'overlap': overlap}}
    export.write_json(report, _output_path(args.out))

    if args.csv:
        csv = _output_path(args.csv)
        export.export_traces_csv(traces, csv)
        export.export_events_csv(events, _sibling(csv, 'events'))
        export.export_markov_csv(markov, _sibling(csv, 'markov'))

    print('{0} event(s) over {1} component(s); all paths blocked at once: '
          '{2}'.format(len(events), len(traces), 'yes' if ever else 'no'))


def plot(args):
    out = _output_path(args.out)
    if args.kind == 'traces':
        if not args.csv:
            raise PipelineError('--kind traces needs --csv.')
        times, columns = export.read_traces_csv(args.csv)
        export.plot_traces(times, columns, out)
    elif args.kind in ('heatmap', 'aod'):
        if not args.infile:
            raise PipelineError('--kind {0} needs --in.'.format(args.kind))
        pm = tensorops.delay_power(_power_tensor(args.infile))
        if args.kind == 'heatmap':
            export.plot_heatmap(pm, out)
        else:
            export.plot_aod(pm, out)
    else:
        if not args.scene:
            raise PipelineError('--kind scene needs --scene.')
        scene = load_scene(args.scene).scene
        export.plot_scene(scene, trace_paths(scene), out)


def build_parser():
    cfg = pyblockage.config
    parser = argparse.ArgumentParser(
        prog=PROG,
        description='Simulate and analyze dynamic human blockage of '
                    'beam-swept 60 GHz links.')
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + pyblockage.__version__)
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='Log more (-v info, -vv debug)')
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    p = sub.add_parser('simulate', help='Simulate a beam-swept measurement')
    p.add_argument('--scene', required=True,
                   help='Scene JSON file or the name of a bundled scene')
    p.add_argument('--out', required=True,
                   help='4-way tensor file to write')
    p.add_argument('--seed', type=int, default=None,
                   help='Override the scene seed')
    p.add_argument('--n-workers', type=int, default=cfg['n_workers'],
                   help='Threads used to synthesize scans')
    p.add_argument('--progress', action='store_true',
                   default=cfg['progress'], help='Show a progress bar')
    p.add_argument('--truth', default=None,
                   help='Also write the noise-free per-path received power '
                        '(dB) to this CSV file')
    p.set_defaults(func=simulate)

    p = sub.add_parser('preprocess',
                       help='Merge beam modes and take the power')
    p.add_argument('--in', dest='infile', required=True,
                   help='4-way tensor file')
    p.add_argument('--out', required=True, help='3-way tensor file to write')
    p.set_defaults(func=preprocess)

    p = sub.add_parser('decompose', help='PARAFAC decomposition')
    p.add_argument('--in', dest='infile', required=True,
                   help='3-way (or 4-way) tensor file')
    p.add_argument('--rank', type=int, default=cfg['rank'],
                   help='Number of components')
    p.add_argument('--max-iters', type=int, default=cfg['max_iters'],
                   help='Maximum ALS sweeps')
    p.add_argument('--tol', type=float, default=cfg['tol'],
                   help='Stop when the relative error changes less than '
                        'this')
    p.add_argument('--init', choices=('svd', 'random'), default='svd',
                   help='Factor initialization')
    p.add_argument('--nonneg', action='store_true',
                   help='Clamp factors to be non-negative')
    p.add_argument('--seed', type=int, default=0,
                   help='Seed of the random initialization')
    p.add_argument('--out', required=True, help='Model JSON to write')
    p.set_defaults(func=decompose)

    p = sub.add_parser('baseline-pca', help='PCA baseline')
    p.add_argument('--in', dest='infile', required=True,
                   help='3-way (or 4-way) tensor file')
    p.add_argument('--rank', type=int, default=cfg['rank'],
                   help='Number of components')
    p.add_argument('--out', required=True, help='JSON file to write')
    p.set_defaults(func=baseline_pca)

    p = sub.add_parser('analyze', help='Blockage events and Markov models')
    p.add_argument('--model', required=True, help='Model JSON')
    p.add_argument('--threshold-db', type=float, default=cfg['threshold_db'],
                   help='Drop below the unblocked reference that counts '
                        'as Blocked')
    p.add_argument('--hysteresis-db', type=float,
                   default=cfg['hysteresis_db'],
                   help='Extra rise needed to leave Blocked')
    p.add_argument('--max-rmse-db', type=float, default=cfg['max_rmse_db'],
                   help='Largest RMSE of a piecewise-linear segment')
    p.add_argument('--floor-db', type=float, default=cfg['floor_db'],
                   help='Lower clamp of the gain traces')
    p.add_argument('--segment-labels', action='store_true',
                   help='Label by segment mean instead of per sample')
    p.add_argument('--slot-duration', type=float, default=None,
                   help='Markov slot in seconds (default: scan period)')
    p.add_argument('--out', required=True, help='Report JSON to write')
    p.add_argument('--csv', default=None,
                   help='Also write traces to this CSV, with events and '
                        'Markov matrices next to it')
    p.set_defaults(func=analyze)

    p = sub.add_parser('plot', help='Render an SVG figure')
    p.add_argument('--kind', choices=('traces', 'heatmap', 'aod', 'scene'),
                   default='traces', help='Figure type')
    p.add_argument('--csv', default=None, help='Trace CSV (--kind traces)')
    p.add_argument('--in', dest='infile', default=None,
                   help='Tensor file (--kind heatmap, aod)')
    p.add_argument('--scene', default=None, help='Scene (--kind scene)')
    p.add_argument('--out', required=True, help='SVG file to write')
    p.set_defaults(func=plot)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    level = pyblockage.config.get('log_level', 'WARNING')
    if args.verbose:
        level = 'DEBUG' if args.verbose > 1 else 'INFO'
    logging.basicConfig(level=level,
                        format='%(asctime)s %(name)s %(levelname)s: '
                               '%(message)s')

    try:
        args.func(args)
    except (PipelineError, TensorFileError, SceneFileError, GeometryError,
            ValueError, OSError) as e:
        print('{0}: error: {1}'.format(PROG, e), file=sys.stderr)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
