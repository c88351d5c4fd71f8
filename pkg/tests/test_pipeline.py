import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsrevents.calculi import CARDIR_2D
from qsrevents.exceptions import BoundaryExtrapolationError, InvalidInputError
from qsrevents.labels import NULL_LABEL, LabelTuple
from qsrevents.pipeline import (
    DEFAULT_SCHEMA,
    FeatureExtractor,
    Session,
    Span,
    event_features,
    extract,
    interpolate_gaps,
    load_session,
    preprocess,
    read_feature_csv,
    resample,
    save_session,
    slice_segments,
)
from qsrevents.sim import ScenarioSpec, generate

N_POINTS = sum(len(v) for v in DEFAULT_SCHEMA.values())
DIMS = {"3D-Raw": 36, "3D-Quant": 42, "2D-Quant": 28, "3D-Qual": 1068, "2D-Qual": 780,
        "3D-Event-Qual": 3204, "2D-Event-Qual": 2340}
LABEL = LabelTuple("performer", "push", "O1", "toward", "O2")


def make_session(times, fn, tracked=None, spans=()):
    times = np.asarray(times, dtype=float)
    pos = np.array([fn(t) for t in times])
    if tracked is None:
        tracked = np.ones(pos.shape[:2], dtype=bool)
    return Session("t", 24.0, dict(DEFAULT_SCHEMA), times, pos, tracked, tuple(spans))


def static_points(seed=0):
    return np.random.default_rng(seed).normal(size=(N_POINTS, 3))


def linear(t, base=None, vel=None):
    base = static_points(0) if base is None else base
    vel = static_points(1) if vel is None else vel
    return base + vel * t


# session I/O and preprocessing

def test_session_json_roundtrip(tmp_path):
    s = make_session(np.arange(30) / 24, linear, spans=[Span(0.0, 1.0, LABEL)])
    save_session(s, tmp_path / "s.json")
    back = load_session(tmp_path / "s.json")
    assert np.array_equal(back.positions, s.positions)
    assert np.array_equal(back.times, s.times)
    assert back.spans == s.spans
    assert back.point_ids == s.point_ids


def test_session_rejects_non_increasing_times():
    with pytest.raises(InvalidInputError):
        make_session([0.0, 0.1, 0.1], linear)


def test_interpolate_gaps():
    s = make_session(np.arange(3) / 24, lambda t: np.full((N_POINTS, 3), 0.0) + [24 * t, 0, 0])
    assert interpolate_gaps(s) is s
    tracked = np.ones((3, N_POINTS), dtype=bool)
    tracked[1, 0] = False
    gap = make_session(np.arange(3) / 24, lambda t: np.full((N_POINTS, 3), 0.0) + [24 * t, 0, 0], tracked)
    gap.positions[1, 0] = 99.0
    filled = interpolate_gaps(gap)
    assert np.allclose(filled.positions[1, 0], [1, 0, 0])
    assert filled.tracked.all()


def test_interpolate_long_gap_on_linear_motion():
    t = np.arange(12) / 24
    s = make_session(t, linear)
    tracked = np.ones((12, N_POINTS), dtype=bool)
    tracked[3:8, 2] = False
    broken = make_session(t, linear, tracked)
    broken.positions[3:8, 2] = 0.0
    assert np.allclose(interpolate_gaps(broken).positions, s.positions, atol=1e-12)


def test_interpolate_boundary_gap_raises():
    tracked = np.ones((5, N_POINTS), dtype=bool)
    tracked[0, 3] = False
    with pytest.raises(BoundaryExtrapolationError):
        interpolate_gaps(make_session(np.arange(5) / 24, linear, tracked))


def test_resample_identity_on_uniform():
    s = make_session(np.arange(50) / 24, lambda t: static_points(int(t * 24)))
    r = resample(s, 24.0)
    assert np.max(np.abs(r.positions - s.positions)) <= 1e-12
    assert np.max(np.abs(r.times - s.times)) <= 1e-12


def test_resample_linear_exact_and_quadratic_bound():
    t12 = np.arange(25) / 12
    lin = resample(make_session(t12, linear), 24.0)
    assert np.allclose(lin.positions, np.array([linear(t) for t in lin.times]), atol=1e-12)
    quad = resample(make_session(t12, lambda t: np.tile([t * t, 0.0, 0.0], (N_POINTS, 1))), 24.0)
    err = np.abs(quad.positions[:, :, 0] - quad.times[:, None] ** 2)
    assert err.max() <= (1 / 12) ** 2 / 4 + 1e-12
    assert np.allclose(np.diff(quad.times), 1 / 24, atol=1e-9)
    assert quad.times[0] == 0.0 and quad.times[-1] == t12[-1]


@settings(max_examples=30)
@given(st.sampled_from([10.0, 15.0, 30.0, 48.0]), st.integers(10, 80))
def test_resample_idempotent(rate, n):
    s = make_session(np.arange(n) / rate, lambda t: static_points(0) * np.sin(3 * t))
    once = resample(s, 24.0)
    twice = resample(once, 24.0)
    assert np.max(np.abs(twice.positions - once.positions)) <= 1e-12


def test_resample_needs_two_frames():
    with pytest.raises(InvalidInputError):
        resample(make_session([0.0], linear))


@pytest.mark.parametrize("n,expected", [(60, 3), (59, 2), (19, 0)])
def test_slice_counts(n, expected):
    segs = slice_segments(make_session(np.arange(n) / 24, linear))
    assert len(segs) == expected
    for seg in segs:
        assert len(seg.times) == 20
        assert np.allclose(np.diff(seg.times), 1 / 24, atol=1e-9)


def test_slice_labels_by_span():
    spans = [Span(0.0, 20 / 24, NULL_LABEL), Span(20 / 24, 59 / 24, LABEL)]
    segs = slice_segments(make_session(np.arange(60) / 24, linear), spans)
    assert [s.label for s in segs] == [NULL_LABEL, LABEL, LABEL]


# features

@pytest.fixture(scope="module")
def roll_segment():
    spec = ScenarioSpec("roll", "past", actor=False, noise=0.0, dropout=0.0, seed=2)
    return preprocess(generate(spec).session)[1]


@pytest.mark.parametrize("kind", list(DIMS))
def test_dimensions_and_legend(kind, roll_segment):
    fm = extract(kind, roll_segment)
    rows = 1 if "Event" in kind else 20
    assert fm.values.shape == (rows, DIMS[kind])
    assert len(fm.legend) == DIMS[kind]
    assert len(set(fm.header())) == DIMS[kind]
    assert np.all(np.isfinite(fm.values))


@pytest.mark.parametrize("kind", ["3D-Qual", "2D-Qual", "3D-Event-Qual", "2D-Event-Qual"])
def test_onehot_blocks_sum_to_one(kind, roll_segment):
    fm = extract(kind, roll_segment)
    groups = fm.onehot_groups()
    assert groups
    covered = sorted(j for cols in groups.values() for j in cols)
    for cols in groups.values():
        assert np.array_equal(fm.values[:, cols].sum(axis=1), np.ones(len(fm.values)))
    if "Event" not in kind:
        assert covered == list(range(fm.values.shape[1]))


@pytest.mark.parametrize("dim", ["3D", "2D"])
def test_event_rows_are_first_last_difference(dim, roll_segment):
    frame = extract(f"{dim}-Qual", roll_segment).values
    event = extract(f"{dim}-Event-Qual", roll_segment).values[0]
    d = frame.shape[1]
    assert np.array_equal(event[:d], frame[0])
    assert np.array_equal(event[d:2 * d], frame[-1])
    assert np.array_equal(event[2 * d:], frame[-1] - frame[0])
    assert np.array_equal(event_features(extract(f"{dim}-Qual", roll_segment)).values[0], event)


def block(fm, model, feature):
    cols = [j for j, (m, f, _) in enumerate(fm.legend) if m == model and f == feature]
    symbols = [fm.legend[j][2] for j in cols]
    return [symbols[i] for i in fm.values[:, cols].argmax(axis=1)]


def test_static_scene():
    pts = static_points(3)
    pts[:, 2] = np.abs(pts[:, 2])
    seg = slice_segments(make_session(np.arange(20) / 24, lambda t: pts))[0]
    quant = extract("3D-Quant", seg).values
    assert np.all(quant == quant[0])
    for kind in ("3D-Qual", "2D-Qual"):
        fm = extract(kind, seg)
        for (model, feature, symbol), col in zip(fm.legend, fm.values.T):
            if feature.startswith("mos"):
                assert np.all(col == (symbol == "static"))
            if feature.startswith(("qtcc", "qtc3d")) and feature.rsplit("#", 1)[1] in "ABCD":
                assert np.all(col == (symbol == "0"))
    event = extract("3D-Event-Qual", seg).values[0]
    d = event.size // 3
    assert np.all(event[2 * d:] == 0)


def test_rolling_marker_cardir_cycles(roll_segment):
    fm = extract("2D-Qual", roll_segment)
    seq = block(fm, "O2", "cardir2d[O2.c0>O2.c2]")
    assert len(set(seq)) >= 4
    assert set(seq) <= set(CARDIR_2D)


def test_sliding_cube_marker_cardir_constant():
    spec = ScenarioSpec("slide", "toward", actor=False, noise=0.0, dropout=0.0, seed=4)
    seg = preprocess(generate(spec).session)[1]
    fm = extract("2D-Qual", seg)
    assert len(set(block(fm, "O1", "cardir2d[O1.c0>O1.c2]"))) == 1


def test_toward_argd_non_increasing():
    spec = ScenarioSpec("slide", "toward", actor=False, noise=0.0, dropout=0.0, seed=5)
    for seg in preprocess(generate(spec).session)[1:]:
        fm = extract("3D-Qual", seg)
        bins = [int(b) for b in block(fm, "O1O2", "argd[O1>O2]")]
        assert all(b2 <= b1 for b1, b2 in zip(bins, bins[1:]))


def test_planar_scene_2d_matches_3d_for_argd_and_radial_slots():
    rng = np.random.default_rng(9)
    base, vel = rng.normal(size=(N_POINTS, 3)), rng.normal(size=(N_POINTS, 3)) * 0.5
    acc = rng.normal(size=(N_POINTS, 3))
    base[:, 2] = vel[:, 2] = acc[:, 2] = 0.0
    seg = slice_segments(make_session(np.arange(20) / 24, lambda t: base + vel * t + acc * t * t))[0]
    f3, f2 = extract("3D-Qual", seg), extract("2D-Qual", seg)
    pairs = {f for _, f, _ in f3.legend if f.startswith("argd")}
    for feature in pairs:
        model = next(m for m, f, _ in f3.legend if f == feature)
        assert block(f3, model, feature) == block(f2, model, feature)
        name = feature[len("argd"):]
        for slot in "AB":
            assert block(f3, model, f"qtc3d{name}#{slot}") == block(f2, model, f"qtcc{name}#{slot}")


def test_unknown_kind():
    seg = slice_segments(make_session(np.arange(20) / 24, linear))[0]
    with pytest.raises(InvalidInputError, match="3D-Raw"):
        extract("4D-Qual", seg)


def test_feature_csv_roundtrip(tmp_path, roll_segment):
    fm = extract("2D-Quant", roll_segment)
    path = tmp_path / "f.csv"
    path.write_text(fm.to_csv(comment="x=1"))
    assert path.read_text().startswith("# kind=2D-Quant")
    back = read_feature_csv(path.read_text())
    assert back.kind == fm.kind
    assert np.array_equal(back.values, fm.values)
    assert back.legend == fm.legend


def test_feature_extractor_transformer(roll_segment):
    est = FeatureExtractor("2D-Quant").fit([roll_segment])
    out = est.transform([roll_segment, roll_segment])
    assert out.shape == (2, 20, DIMS["2D-Quant"])
    assert len(est.get_feature_names_out()) == DIMS["2D-Quant"]
