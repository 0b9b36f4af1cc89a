"""
Blockage analytics on gain trajectories.

Gain trajectories are turned into dB traces, fitted with piecewise-linear
segments, labeled Blocked/Unblocked, cut into blockage events and
summarized with per-path and joint Markov chains.
"""
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

logger = logging.getLogger(__name__)

# Fading and rising regions are delimited by this drop from the reference
EDGE_DB = 3.0


@dataclass
class GainTrace:
    trace_id: str
    timestamps: np.ndarray
    levels_db: np.ndarray

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        self.levels_db = np.asarray(self.levels_db, dtype=float)
        if self.timestamps.shape != self.levels_db.shape:
            raise ValueError('timestamps and levels differ in length: {0} vs '
                             '{1}'.format(len(self.timestamps),
                                          len(self.levels_db)))
        if np.any(np.diff(self.timestamps) <= 0):
            raise ValueError('Trace timestamps must be strictly increasing.')

    def __len__(self):
        return len(self.levels_db)


@dataclass(frozen=True)
class Segment:
    '''
    Least-squares line over samples `start`..`end` (inclusive).

    The line is slope_db_per_s * (t - t[start]) + intercept_db.
    '''
    start: int
    end: int
    slope_db_per_s: float
    intercept_db: float
    rmse_db: float


@dataclass
class SegmentedTrace:
    trace_id: str
    segments: list

    def segment_means(self, trace):
        '''Mean level of each sample's segment.'''
        out = np.empty(len(trace))
        for seg in self.segments:
            out[seg.start:seg.end + 1] = \
                trace.levels_db[seg.start:seg.end + 1].mean()
        return out


@dataclass
class StateSequence:
    '''Per-sample states; True means Blocked.'''
    trace_id: str
    timestamps: np.ndarray
    states: np.ndarray
    unblocked_ref_db: float

    def __len__(self):
        return len(self.states)

    @property
    def labels(self):
        return ''.join('B' if s else 'U' for s in self.states)


@dataclass(frozen=True)
class BlockageEvent:
    t_fade_start: float
    t_block_start: float
    t_block_end: float
    t_rise_end: float
    depth_db: float
    trace_id: str = ''

    @property
    def t_blocked(self):
        return self.t_block_end - self.t_block_start

    @property
    def t_fading(self):
        return self.t_block_start - self.t_fade_start

    @property
    def t_rising(self):
        return self.t_rise_end - self.t_block_end

    def to_dict(self):
        return {'trace_id': self.trace_id,
                't_fade_start': self.t_fade_start,
                't_block_start': self.t_block_start,
                't_block_end': self.t_block_end,
                't_rise_end': self.t_rise_end,
                't_fading': self.t_fading,
                't_blocked': self.t_blocked,
                't_rising': self.t_rising,
                'depth_db': self.depth_db}


def gain_trajectories(m, floor_db=-120.0, timestamps=None):
    '''
    dB traces of the gain trajectories of a CP model.

    levels_db[k] = max(10*log10(g[k]**2 * scale), floor_db), where
    scale = (sum(d) * sum(s))**2 puts back the magnitude carried by the
    unit-norm delay and spatial signatures.

    Parameters
    ----------
    m : `pyblockage.analysis.parafac.CPModel`
    floor_db : float
        Lower clamp of the levels
    timestamps : `numpy.ndarray`
        Scan times. Defaults to the model's own timestamps, then to scan
        indices.

    Returns
    -------
    traces : list of `GainTrace`
        One per component, in model order
    '''
    if timestamps is None:
        timestamps = m.timestamps
    if timestamps is None:
        timestamps = np.arange(m.G.shape[0], dtype=float)

    traces = []
    for ell in range(m.L):
        scale = (m.D[:, ell].sum() * m.S[:, ell].sum())**2
        with np.errstate(divide='ignore'):
            levels = 10 * np.log10(m.G[:, ell]**2 * scale)
        traces.append(GainTrace('component-{0}'.format(ell), timestamps,
                                np.maximum(levels, floor_db)))
    return traces


def _line_fit(t, y):
    if len(t) == 1:
        return 0.0, float(y[0]), 0.0
    slope, intercept = np.polyfit(t - t[0], y, 1)
    resid = y - (slope * (t - t[0]) + intercept)
    return slope, intercept, float(np.sqrt(np.mean(resid**2)))


def fit_piecewise(trace, max_rmse_db=1.5):
    '''
    Bottom-up piecewise-linear segmentation.

    Starts from segments of two samples (one for an odd tail) and
    repeatedly merges the adjacent pair whose joint line fit has the lowest
    RMSE (leftmost on ties) until that RMSE would exceed `max_rmse_db`.

    Returns
    -------
    segmented : `SegmentedTrace`
    '''
    n = len(trace)
    if n < 2:
        raise ValueError('A trace needs at least two samples: {0}'.format(n))
    t = trace.timestamps
    y = trace.levels_db

    # Pairs, plus a single-sample tail when n is odd
    bounds = [[i, min(i + 1, n - 1)] for i in range(0, n, 2)]

    def merge_cost(left, right):
        a, b = left[0], right[1]
        return _line_fit(t[a:b + 1], y[a:b + 1])[2]

    costs = [merge_cost(bounds[i], bounds[i + 1])
             for i in range(len(bounds) - 1)]

    while costs:
        i = int(np.argmin(costs))
        if costs[i] > max_rmse_db:
            break
        bounds[i] = [bounds[i][0], bounds[i + 1][1]]
        del bounds[i + 1]
        del costs[i]
        if i < len(costs):
            costs[i] = merge_cost(bounds[i], bounds[i + 1])
        if i > 0:
            costs[i - 1] = merge_cost(bounds[i - 1], bounds[i])

    segments = []
    for a, b in bounds:
        slope, intercept, rmse = _line_fit(t[a:b + 1], y[a:b + 1])
        segments.append(Segment(a, b, float(slope), float(intercept), rmse))
    logger.debug('%s: %d segments', trace.trace_id, len(segments))
    return SegmentedTrace(trace.trace_id, segments)


def unblocked_reference(levels_db):
    '''Median of the levels within 3 dB of the maximum.'''
    levels_db = np.asarray(levels_db)
    top = levels_db[levels_db >= levels_db.max() - EDGE_DB]
    return float(np.median(top))


def label_states(trace, threshold_db=10.0, hysteresis_db=0.0, segments=None):
    '''
    Label every sample Blocked or Unblocked.

    Blocked is entered when the level drops below ref - threshold_db and left
    when it rises above ref - threshold_db + hysteresis_db.

    Parameters
    ----------
    trace : `GainTrace`
    threshold_db : float
        Drop below the unblocked reference that counts as Blocked
    hysteresis_db : float
        Extra rise needed to leave Blocked
    segments : `SegmentedTrace`
        If given, samples are labeled by the mean level of their segment

    Returns
    -------
    states : `StateSequence`
    '''
    if threshold_db <= 0:
        raise ValueError('threshold_db must be > 0: {0}'.format(threshold_db))
    if not 0 <= hysteresis_db < threshold_db:
        raise ValueError('hysteresis_db must be in [0, threshold_db): {0}'
                         .format(hysteresis_db))

    levels = trace.levels_db
    if segments is not None:
        levels = segments.segment_means(trace)

    ref = unblocked_reference(levels)
    enter = ref - threshold_db
    leave = enter + hysteresis_db

    states = np.zeros(len(levels), dtype=bool)
    blocked = False
    for k, level in enumerate(levels):
        if blocked:
            blocked = not level > leave
        else:
            blocked = level < enter
        states[k] = blocked
    return StateSequence(trace.trace_id, trace.timestamps, states, ref)


def _runs(states):
    padded = np.concatenate(([False], states, [False])).astype(int)
    edges = np.flatnonzero(np.diff(padded))
    return [(s, e - 1) for s, e in zip(edges[::2], edges[1::2])]


def detect_events(trace, states):
    '''
    Blockage events of a labeled trace, one per maximal Blocked run.

    Sample k stands for the slot [t[k], t[k+1]). The fading region runs
    from the first slot after the last pre-run sample within 3 dB of the
    reference up to the run; the rising region runs from the end of the run
    to the first later sample back within 3 dB. Both regions stop at
    neighboring events and at the trace ends.

    Returns
    -------
    events : list of `BlockageEvent`
    '''
    if len(states) != len(trace):
        raise ValueError('States and trace differ in length.')
    t = trace.timestamps
    y = trace.levels_db
    n = len(t)
    ref = states.unblocked_ref_db
    near = y >= ref - EDGE_DB

    runs = _runs(states.states)
    events = []
    lower = 0
    for r, (s, e) in enumerate(runs):
        above = np.flatnonzero(near[lower:s])
        fade_idx = lower + above[-1] + 1 if above.size else lower

        block_end_idx = e + 1 if e + 1 < n else n - 1
        upper = runs[r + 1][0] if r + 1 < len(runs) else n
        after = np.flatnonzero(near[e + 1:upper])
        if after.size:
            rise_idx = e + 1 + after[0]
        elif r + 1 < len(runs):
            rise_idx = upper
        else:
            rise_idx = n - 1
        rise_idx = max(rise_idx, block_end_idx)

        events.append(BlockageEvent(t_fade_start=float(t[fade_idx]),
                                    t_block_start=float(t[s]),
                                    t_block_end=float(t[block_end_idx]),
                                    t_rise_end=float(t[rise_idx]),
                                    depth_db=float(ref - y[s:e + 1].min()),
                                    trace_id=trace.trace_id))
        lower = rise_idx
    return events


@dataclass
class MarkovModel:
    '''
    Two-state (Unblocked=0, Blocked=1) Markov chains per path and over the
    joint state of all paths. Joint state index has path 0 as its most
    significant bit.
    '''
    per_path: list
    joint: np.ndarray
    slot_duration: float
    per_path_counts: list
    joint_counts: np.ndarray
    per_path_unvisited: list
    joint_unvisited: np.ndarray
    path_ids: list = field(default_factory=list)

    @property
    def n_paths(self):
        return len(self.per_path)

    def stationary(self, path=None):
        '''
        Stationary distribution of one path's chain, or of the joint chain.
        '''
        P = self.joint if path is None else self.per_path[path]
        n = P.shape[0]
        A = np.vstack([P.T - np.eye(n), np.ones(n)])
        b = np.zeros(n + 1)
        b[-1] = 1.0
        pi, *_ = linalg.lstsq(A, b)
        return np.clip(pi, 0.0, 1.0)

    def mean_durations(self):
        '''
        Mean sojourn (seconds) in Unblocked and Blocked for every path.

        Returns
        -------
        durations : `numpy.ndarray`
            (n_paths, 2); inf where a state is never left
        '''
        out = np.empty((self.n_paths, 2))
        for p, P in enumerate(self.per_path):
            stay = np.diag(P)
            with np.errstate(divide='ignore'):
                out[p] = self.slot_duration / (1 - stay)
        return out

    def sample(self, n_slots, seed=0, start=0):
        '''
        Draw joint state sequences from the joint chain.

        Returns
        -------
        states : `numpy.ndarray`
            Boolean (n_paths, n_slots); True means Blocked
        '''
        rng = np.random.default_rng(seed)
        joint = np.empty(n_slots, dtype=int)
        joint[0] = start
        cdf = np.cumsum(self.joint, axis=1)
        for k in range(1, n_slots):
            u = rng.uniform()
            joint[k] = min(np.searchsorted(cdf[joint[k - 1]], u, side='right'),
                           self.joint.shape[0] - 1)
        shifts = np.arange(self.n_paths - 1, -1, -1)
        return ((joint[None, :] >> shifts[:, None]) & 1).astype(bool)

    def to_dict(self):
        return {'slot_duration': self.slot_duration,
                'path_ids': list(self.path_ids),
                'per_path': [P.tolist() for P in self.per_path],
                'per_path_counts': [C.tolist() for C in self.per_path_counts],
                'per_path_unvisited': [u.tolist()
                                       for u in self.per_path_unvisited],
                'joint': self.joint.tolist(),
                'joint_counts': self.joint_counts.tolist(),
                'joint_unvisited': self.joint_unvisited.tolist()}


def _transition_matrix(counts):
    rows = counts.sum(axis=1)
    unvisited = rows == 0
    P = np.zeros(counts.shape)
    P[~unvisited] = counts[~unvisited] / rows[~unvisited, None]
    P[unvisited] = np.eye(counts.shape[0])[unvisited]
    return P, unvisited


def _decimation(seq, slot_duration):
    ts = np.asarray(seq.timestamps, dtype=float)
    spacing = float(np.median(np.diff(ts))) if len(ts) > 1 else 1.0
    if slot_duration is None:
        return 1, spacing
    ratio = slot_duration / spacing
    step = max(int(round(ratio)), 1)
    if abs(ratio - step) > 1e-6:
        msg = ('Slot duration {0} s is not a multiple of the state spacing '
               '{1} s; using every {2} state(s)'
               .format(slot_duration, spacing, step))
        warnings.warn(msg)
        logger.warning(msg)
    return step, step * spacing


def fit_markov(state_seqs, slot_duration=None):
    '''
    Maximum-likelihood transition matrices per path and jointly.

    Parameters
    ----------
    state_seqs : list of `StateSequence`
        Equal-length state sequences, one per path
    slot_duration : float
        Markov slot in seconds. Defaults to the state spacing; coarser
        slots decimate the sequences.

    Returns
    -------
    model : `MarkovModel`
        Rows never visited get a self-loop and are flagged
    '''
    if not state_seqs:
        raise ValueError('At least one state sequence is required.')
    lengths = {len(s) for s in state_seqs}
    if len(lengths) != 1:
        raise ValueError('State sequences differ in length: {0}'
                         .format(sorted(lengths)))

    step, slot = _decimation(state_seqs[0], slot_duration)
    states = np.array([np.asarray(s.states, dtype=int)[::step]
                       for s in state_seqs])
    if states.shape[1] < 2:
        raise ValueError('Need at least two slots to count transitions.')

    n_paths = states.shape[0]
    per_path, per_counts, per_unvisited = [], [], []
    for row in states:
        counts = np.bincount(2 * row[:-1] + row[1:],
                             minlength=4).reshape(2, 2).astype(float)
        P, unvisited = _transition_matrix(counts)
        per_path.append(P)
        per_counts.append(counts)
        per_unvisited.append(unvisited)

    weights = 2**np.arange(n_paths - 1, -1, -1)
    joint_state = weights @ states
    n_joint = 2**n_paths
    joint_counts = np.bincount(n_joint * joint_state[:-1] + joint_state[1:],
                               minlength=n_joint**2)
    joint_counts = joint_counts.reshape(n_joint, n_joint).astype(float)
    joint, joint_unvisited = _transition_matrix(joint_counts)

    for p, unvisited in enumerate(per_unvisited):
        if unvisited.any():
            logger.info('Path %d: state(s) %s never visited', p,
                        np.flatnonzero(unvisited).tolist())

    return MarkovModel(per_path=per_path, joint=joint, slot_duration=slot,
                       per_path_counts=per_counts, joint_counts=joint_counts,
                       per_path_unvisited=per_unvisited,
                       joint_unvisited=joint_unvisited,
                       path_ids=[s.trace_id for s in state_seqs])


def joint_outage(state_seqs):
    '''
    Whether all paths are ever blocked at once, and pairwise overlaps.

    Returns
    -------
    ever_all_blocked : bool
    all_blocked_fraction : float
        Fraction of slots with every path Blocked
    overlap : `numpy.ndarray`
        overlap[p, q] is the fraction of slots with p and q both Blocked
    '''
    lengths = {len(s) for s in state_seqs}
    if len(lengths) != 1:
        raise ValueError('State sequences differ in length: {0}'
                         .format(sorted(lengths)))
    B = np.array([np.asarray(s.states, dtype=bool) for s in state_seqs])
    all_blocked = B.all(axis=0)
    Bf = B.astype(float)
    overlap = (Bf @ Bf.T) / B.shape[1]
    return bool(all_blocked.any()), float(all_blocked.mean()), overlap
