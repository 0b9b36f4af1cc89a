import os

import numpy as np
import pandas as pd
import pytest

from pyblockage.analysis import blocktrace as bt
from pyblockage.analysis.tensorops import power_tensor
from pyblockage.data import export
from pyblockage.data.scene import load_scene
from pyblockage.sim.geometry import trace_paths


def two_traces(n=50):
    t = np.arange(n) * 0.003
    rng = np.random.default_rng(0)
    return [bt.GainTrace('component-0', t, rng.uniform(-40, 0, n)),
            bt.GainTrace('component-1', t, rng.uniform(-60, -20, n))]


def test_two_trace_csv(tmp_path):
    """Two traces give a time column plus two level columns."""
    traces = two_traces()
    path = str(tmp_path / 'traces.csv')
    export.export_traces_csv(traces, path)
    frame = pd.read_csv(path)
    assert list(frame.columns) == ['time_s', 'component-0', 'component-1']

    times, columns = export.read_traces_csv(path)
    np.testing.assert_allclose(times, traces[0].timestamps, atol=1e-9)
    for trace in traces:
        np.testing.assert_allclose(columns[trace.trace_id], trace.levels_db,
                                   atol=1e-6)


def test_traces_need_common_time_base():
    a, b = two_traces()
    b = bt.GainTrace('x', b.timestamps + 1.0, b.levels_db)
    with pytest.raises(ValueError):
        export.traces_frame([a, b])


def test_events_and_markov_csv(tmp_path):
    t = np.arange(6.0)
    trace = bt.GainTrace('p', t, [0, 0, -20, -20, -20, 0])
    states = bt.label_states(trace)
    events = bt.detect_events(trace, states)
    frame = export.export_events_csv(events, str(tmp_path / 'e.csv'))
    assert len(frame) == 1
    assert frame['t_blocked'][0] == 3.0

    model = bt.fit_markov([states])
    frame = export.export_markov_csv(model, str(tmp_path / 'm.csv'))
    path_rows = frame[frame['chain'] == 'path']
    ub = path_rows[(path_rows['from'] == 'U') & (path_rows['to'] == 'B')]
    assert ub['probability'].iloc[0] == 0.5
    assert (frame['chain'] == 'joint').sum() == 4


def test_json_is_sorted_and_plain(tmp_path):
    path = str(tmp_path / 'r.json')
    export.write_json({'b': np.float64(1.5), 'a': np.arange(3),
                       'c': np.bool_(True), 'd': np.inf}, path)
    with open(path) as f:
        text = f.read()
    assert text.index('"a"') < text.index('"b"')
    doc = export.read_json(path)
    assert doc == {'a': [0, 1, 2], 'b': 1.5, 'c': True, 'd': 'inf'}


def test_heatmap_cells(tmp_path):
    """The heatmap has one cell per beam pair and scan."""
    pm = power_tensor(np.random.default_rng(1).uniform(size=(1, 144, 20)),
                      n_tx=12, n_rx=12).isel(delay=0)
    _, cells = export.plot_heatmap(pm, str(tmp_path / 'h.svg'))
    assert cells == (144, 20)
    _, cells = export.plot_aod(pm, str(tmp_path / 'a.svg'))
    assert cells == (12, 20)


def test_svg_is_deterministic(tmp_path):
    traces = two_traces()
    columns = {tr.trace_id: tr.levels_db for tr in traces}
    a = str(tmp_path / 'a.svg')
    b = str(tmp_path / 'b.svg')
    export.plot_traces(traces[0].timestamps, columns, a)
    export.plot_traces(traces[0].timestamps, columns, b)
    with open(a, 'rb') as fa, open(b, 'rb') as fb:
        assert fa.read() == fb.read()


def test_scene_plot(tmp_path):
    scene = load_scene('three_blockers').scene
    path = export.plot_scene(scene, trace_paths(scene),
                             str(tmp_path / 's.svg'))
    assert os.path.getsize(path) > 0
