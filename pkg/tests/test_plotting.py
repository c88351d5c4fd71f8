import numpy as np
import pytest

from qsrevents.exceptions import InvalidInputError
from qsrevents.plotting import embedded_trajectories, plot_embedded
from qsrevents.sim import ScenarioSpec, generate


def session(verb, prep, **kw):
    return generate(ScenarioSpec(verb, prep, noise=0.0, dropout=0.0, **kw)).session


def test_rolling_markers_circle_each_other():
    traces = embedded_trajectories(session("roll", "past"), "O2")
    rel = traces["O2.c0"] - traces["O2.c2"]
    turn = np.abs(np.diff(np.unwrap(np.arctan2(rel[:, 1], rel[:, 0])))).sum()
    assert turn >= 2 * np.pi  # at least one full revolution of the marker pair


def test_sliding_markers_keep_their_bearing():
    traces = embedded_trajectories(session("slide", "toward"), "O1")
    rel = traces["O1.c0"] - traces["O1.c2"]
    angle = np.arctan2(rel[:, 1], rel[:, 0])
    assert np.ptp(np.unwrap(angle)) < 1e-6


def test_static_scene_is_a_point_cluster(tmp_path):
    traces = plot_embedded(session("slide", "toward", speed=0.0), "O1", tmp_path / "s.svg")
    for xy in traces.values():
        assert np.ptp(xy, axis=0).max() < 1e-9
    assert (tmp_path / "s.svg").stat().st_size > 0


def test_unknown_factor_model():
    with pytest.raises(InvalidInputError):
        embedded_trajectories(session("roll", "past"), "O3")
