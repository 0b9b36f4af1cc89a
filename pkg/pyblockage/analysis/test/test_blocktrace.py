import numpy as np
import pytest

from pyblockage.analysis import blocktrace as bt
from pyblockage.analysis.parafac import CPModel

SLOT = 0.003


def trace_from(points, n, dt=SLOT, trace_id='los'):
    t = np.arange(n) * dt
    times, levels = zip(*points)
    return bt.GainTrace(trace_id, t, np.interp(t, times, levels))


def crossing_trace(offset=0.0):
    '''0 dB, a 25 dB dip spending 0.2 s below -10 dB, back to 0 dB.'''
    points = [(0.0, 0.0), (0.9, 0.0), (1.0, -10.0), (1.03, -25.0),
              (1.17, -25.0), (1.2, -10.0), (1.3, 0.0), (2.0, 0.0)]
    return trace_from([(t + offset, y) for t, y in points], n=667)


def states_from(labels, trace_id='p', dt=1.0):
    states = np.array([c == 'B' for c in labels])
    return bt.StateSequence(trace_id, np.arange(len(states)) * dt, states,
                            0.0)


def test_gain_trajectories_constant_and_halved():
    g = np.ones((10, 1))
    g[5:] = 0.5
    m = CPModel(D=np.array([[0.6], [0.8]]), S=np.array([[1.0]]), G=g)
    trace, = bt.gain_trajectories(m)
    np.testing.assert_allclose(trace.levels_db[:5], trace.levels_db[0])
    assert trace.levels_db[5] - trace.levels_db[4] == \
        pytest.approx(20 * np.log10(0.5))
    assert trace.levels_db[0] == pytest.approx(10 * np.log10(1.4**2))


def test_gain_trajectories_floor_and_timestamps():
    m = CPModel(D=np.ones((1, 1)), S=np.ones((1, 1)),
                G=np.array([[1.0], [0.0]]), timestamps=np.array([0.0, 0.5]))
    trace, = bt.gain_trajectories(m, floor_db=-90.0)
    assert trace.levels_db[1] == -90.0
    np.testing.assert_array_equal(trace.timestamps, [0.0, 0.5])


def test_gain_trace_validation():
    with pytest.raises(ValueError):
        bt.GainTrace('x', [0.0, 1.0], [1.0])
    with pytest.raises(ValueError):
        bt.GainTrace('x', [0.0, 0.0], [1.0, 1.0])


def test_linear_trace_is_one_segment():
    t = np.arange(50) * 0.01
    seg = bt.fit_piecewise(bt.GainTrace('x', t, 3.0 - 20 * t))
    assert len(seg.segments) == 1
    s, = seg.segments
    assert (s.start, s.end) == (0, 49)
    assert s.rmse_db == pytest.approx(0.0, abs=1e-9)
    assert s.slope_db_per_s == pytest.approx(-20.0)


def test_trapezoid_gives_five_segments():
    trace = trace_from([(0.0, 0.0), (1.0, 0.0), (1.2, -25.0), (1.8, -25.0),
                        (2.0, 0.0), (3.0, 0.0)], n=300, dt=0.01)
    seg = bt.fit_piecewise(trace, max_rmse_db=1.5)
    slopes = [s.slope_db_per_s for s in seg.segments]
    np.testing.assert_allclose(slopes, [0.0, -125.0, 0.0, 125.0, 0.0],
                               atol=1e-6)
    assert [s.start for s in seg.segments] == [0, 100, 120, 180, 200]


def test_segments_tile_the_trace():
    rng = np.random.default_rng(0)
    trace = bt.GainTrace('x', np.arange(101) * SLOT,
                         rng.standard_normal(101) * 3)
    seg = bt.fit_piecewise(trace, max_rmse_db=2.0)
    assert seg.segments[0].start == 0
    assert seg.segments[-1].end == 100
    for a, b in zip(seg.segments, seg.segments[1:]):
        assert b.start == a.end + 1
    for s in seg.segments:
        assert s.rmse_db <= 2.0


def test_odd_length_tail_respects_the_bound():
    trace = bt.GainTrace('x', np.arange(5) * SLOT, [0, 0, 0, -20, 0])
    seg = bt.fit_piecewise(trace, max_rmse_db=1.5)
    assert [(s.start, s.end) for s in seg.segments] == [(0, 1), (2, 3),
                                                         (4, 4)]
    assert all(s.rmse_db <= 1.5 for s in seg.segments)

    flat = bt.GainTrace('x', np.arange(7) * SLOT, np.full(7, -3.0))
    assert len(bt.fit_piecewise(flat).segments) == 1


def test_noise_with_unbounded_rmse_is_one_segment():
    rng = np.random.default_rng(1)
    trace = bt.GainTrace('x', np.arange(40) * SLOT, rng.standard_normal(40))
    assert len(bt.fit_piecewise(trace, max_rmse_db=np.inf).segments) == 1


def test_label_example():
    trace = bt.GainTrace('x', np.arange(5) * SLOT,
                         [-60.0, -60.0, -75.0, -74.0, -60.0])
    states = bt.label_states(trace, threshold_db=10.0)
    assert states.labels == 'UUBBU'
    assert states.unblocked_ref_db == -60.0


def test_flat_trace_is_unblocked():
    trace = bt.GainTrace('x', np.arange(20) * SLOT, np.full(20, -42.0))
    assert bt.label_states(trace).labels == 'U' * 20


def test_brief_recovery_kept_without_hysteresis():
    levels = [0, 0, -20, -20, -5, -20, -20, 0, 0]
    trace = bt.GainTrace('x', np.arange(9) * SLOT, levels)
    assert bt.label_states(trace).labels == 'UUBBUBBUU'
    assert bt.label_states(trace, hysteresis_db=6.0).labels == 'UUBBBBBUU'


def test_labels_invariant_to_offset():
    trace = crossing_trace()
    shifted = bt.GainTrace('x', trace.timestamps, trace.levels_db - 37.5)
    assert bt.label_states(trace).labels == bt.label_states(shifted).labels


def test_label_by_segment_means():
    rng = np.random.default_rng(2)
    clean = crossing_trace()
    noisy = bt.GainTrace('x', clean.timestamps,
                         clean.levels_db + 0.3 * rng.standard_normal(
                             len(clean)))
    seg = bt.fit_piecewise(noisy, max_rmse_db=1.5)
    states = bt.label_states(noisy, segments=seg)
    events = bt.detect_events(noisy, states)
    assert len(events) == 1
    assert events[0].t_blocked == pytest.approx(0.2, abs=0.05)


def test_label_argument_checks():
    trace = crossing_trace()
    with pytest.raises(ValueError):
        bt.label_states(trace, threshold_db=0.0)
    with pytest.raises(ValueError):
        bt.label_states(trace, threshold_db=10.0, hysteresis_db=10.0)


def test_single_blockage_event():
    trace = crossing_trace()
    events = bt.detect_events(trace, bt.label_states(trace))
    assert len(events) == 1
    ev, = events
    assert ev.depth_db >= 20.0
    assert ev.t_blocked == pytest.approx(0.2, abs=SLOT + 1e-9)
    assert ev.t_fading == pytest.approx(0.07, abs=2 * SLOT)
    assert ev.t_rising == pytest.approx(0.07, abs=2 * SLOT)
    assert ev.t_fade_start <= ev.t_block_start < ev.t_block_end \
        <= ev.t_rise_end


def test_no_events_when_unblocked():
    trace = bt.GainTrace('x', np.arange(10) * SLOT, np.zeros(10))
    assert bt.detect_events(trace, bt.label_states(trace)) == []


def test_two_dips_give_disjoint_events():
    n = 1334
    t = np.arange(n) * SLOT
    first = crossing_trace().levels_db
    levels = np.zeros(n)
    levels[:len(first)] = first
    levels[len(first):2 * len(first)] = first
    trace = bt.GainTrace('x', t, levels)
    events = bt.detect_events(trace, bt.label_states(trace))
    assert len(events) == 2
    a, b = events
    assert a.t_rise_end <= b.t_fade_start
    total = sum(ev.t_rise_end - ev.t_fade_start for ev in events)
    assert total <= t[-1] - t[0]


def test_event_dict():
    trace = crossing_trace()
    ev, = bt.detect_events(trace, bt.label_states(trace))
    d = ev.to_dict()
    assert d['t_blocked'] == ev.t_blocked
    assert d['trace_id'] == 'los'


def test_markov_hand_counts():
    model = bt.fit_markov([states_from('UUBBBU')])
    P, = model.per_path
    np.testing.assert_allclose(P, [[0.5, 0.5], [1 / 3, 2 / 3]])
    np.testing.assert_allclose(model.stationary(0), [0.4, 0.6])
    np.testing.assert_allclose(model.mean_durations(), [[2.0, 3.0]])
    assert model.slot_duration == 1.0


def test_markov_never_blocked():
    model = bt.fit_markov([states_from('UUUUU')])
    assert model.per_path[0][0, 0] == 1.0
    assert model.per_path_unvisited[0].tolist() == [False, True]


def test_joint_counts_marginalize_to_per_path():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n_paths = rng.integers(1, 4)
        seqs = [states_from(''.join(rng.choice(['U', 'B'], 30)),
                            trace_id=str(p)) for p in range(n_paths)]
        model = bt.fit_markov(seqs)
        np.testing.assert_allclose(model.joint.sum(axis=1), 1.0)
        bits = (np.arange(2**n_paths)[:, None]
                >> np.arange(n_paths - 1, -1, -1)[None, :]) & 1
        for p in range(n_paths):
            counts = np.zeros((2, 2))
            for i in range(2**n_paths):
                for j in range(2**n_paths):
                    counts[bits[i, p], bits[j, p]] += model.joint_counts[i, j]
            np.testing.assert_array_equal(counts, model.per_path_counts[p])


def test_joint_state_has_path_zero_as_high_bit():
    model = bt.fit_markov([states_from('BB'), states_from('UU')])
    assert model.joint_counts[2, 2] == 1.0


def test_coarser_slot_decimates():
    model = bt.fit_markov([states_from('UUBBBBUU')], slot_duration=2.0)
    assert model.slot_duration == 2.0
    assert model.per_path_counts[0].sum() == 3
    with pytest.warns(UserWarning):
        bt.fit_markov([states_from('UUBBBBUU')], slot_duration=1.5)


def test_markov_rejects_unequal_lengths():
    with pytest.raises(ValueError):
        bt.fit_markov([states_from('UU'), states_from('UUU')])


def test_markov_sample():
    model = bt.fit_markov([states_from('UUBBBU'), states_from('UBBUUU')])
    draws = model.sample(50, seed=4)
    assert draws.shape == (2, 50)
    assert not draws[:, 0].any()
    np.testing.assert_array_equal(draws, model.sample(50, seed=4))


def test_joint_outage_examples():
    ever, frac, overlap = bt.joint_outage([states_from('UBB'),
                                           states_from('BBU')])
    assert ever
    assert frac == pytest.approx(1 / 3)
    assert overlap[0, 1] == pytest.approx(1 / 3)

    ever, frac, _ = bt.joint_outage([states_from('BBUU'),
                                     states_from('UUBB')])
    assert not ever
    assert frac == 0.0
