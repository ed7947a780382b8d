import json
from datetime import datetime
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emosense.core import (
    CLASS_RANGES,
    CLASS_VIDEOS,
    DEFAULT_LABELS,
    EXPECTED_RATES,
    Label,
    ProtocolTimeline,
    RawTrace,
    SensorKind,
    SessionManifest,
    VideoEntry,
    discretize_score,
    load_trace,
    lookup_video_labels,
    parse_manifest,
    segment_session,
    serialize_manifest,
    write_trace,
)
from emosense.errors import (
    MalformedManifest,
    MalformedTrace,
    MissingChannel,
    NonFinite,
    OutOfRange,
    RateMismatch,
    UnknownVideo,
)


def manifest_doc(**overrides):
    doc = {
        "subject_id": "S01",
        "channels": {k.value: f"S01/{k.value}.csv" for k in SensorKind},
        "timeline": {"trial_count": 4, "video_order": [41, 96, 24, 80, 56, 111, 63, 88]},
        "session_start": "2017-03-01T09:00:00",
    }
    doc.update(overrides)
    return doc


# --------------------------------------------------------------------------
# manifests


def test_parse_manifest_well_formed():
    m = parse_manifest(json.dumps(manifest_doc()))
    assert m.subject_id == "S01"
    assert set(m.channels) == set(SensorKind)
    assert m.timeline.video_order == (41, 96, 24, 80, 56, 111, 63, 88)
    assert len(m.timeline.video_order) == 8
    assert m.session_start == datetime(2017, 3, 1, 9)


def test_parse_manifest_missing_emg_ch2():
    doc = manifest_doc()
    del doc["channels"]["EMG_ch2"]
    with pytest.raises(MissingChannel, match="EMG_ch2"):
        parse_manifest(json.dumps(doc))


def test_parse_manifest_unknown_video():
    doc = manifest_doc(timeline={"trial_count": 4, "video_order": [41, 96, 24, 80, 56, 111, 63, 999]})
    with pytest.raises(UnknownVideo, match="999"):
        parse_manifest(json.dumps(doc))


@pytest.mark.parametrize("text", ["{not json", "[1, 2]", json.dumps({"subject_id": "x"})])
def test_parse_manifest_malformed(text):
    with pytest.raises(MalformedManifest):
        parse_manifest(text)


def test_parse_manifest_bad_timestamp():
    with pytest.raises(MalformedManifest):
        parse_manifest(json.dumps(manifest_doc(session_start="yesterday")))


def test_manifest_roundtrip():
    m = parse_manifest(json.dumps(manifest_doc()))
    again = parse_manifest(serialize_manifest(m))
    assert again == m


@given(
    st.permutations([24, 80, 41, 96, 63, 88, 56, 111]),
    st.integers(1, 4),
    st.sampled_from([0.0, 3.0, 5.5]),
    st.one_of(st.none(), st.datetimes(min_value=datetime(2000, 1, 1), max_value=datetime(2100, 1, 1))),
)
def test_manifest_roundtrip_property(order, trials, screen, start):
    tl = ProtocolTimeline(trial_count=trials, video_order=tuple(order[: 2 * trials]), trial_screen_s=screen)
    m = SessionManifest("subj", {k: Path("d") / f"{k.value}.csv" for k in SensorKind}, tl, start)
    assert parse_manifest(serialize_manifest(m)) == m


# --------------------------------------------------------------------------
# traces


def test_load_trace_eeg(tmp_path):
    p = tmp_path / "eeg.csv"
    p.write_text("# kind=EEG_raw rate_hz=512\n1.0\n-2.5\n3\n")
    tr = load_trace(p, SensorKind.EEG_RAW)
    assert tr.sampling_rate_hz == 512
    np.testing.assert_array_equal(tr.samples, [1.0, -2.5, 3.0])


def test_load_trace_gsr_rate_mismatch(tmp_path):
    p = tmp_path / "gsr.csv"
    p.write_text("# kind=GSR rate_hz=512\n1.0\n")
    with pytest.raises(RateMismatch, match="128"):
        load_trace(p, SensorKind.GSR)


def test_load_trace_nan_row(tmp_path):
    p = tmp_path / "gsr.csv"
    p.write_text("# kind=GSR rate_hz=128\n1.0\nnan\n2.0\n")
    with pytest.raises(NonFinite) as info:
        load_trace(p, SensorKind.GSR)
    assert "gsr.csv" in str(info.value) and "GSR" in str(info.value) and "line 3" in str(info.value)


@pytest.mark.parametrize(
    "text",
    ["1.0\n2.0\n", "# kind=GSR\n1\n", "# kind=EMG_ch1 rate_hz=128\n1\n", "# kind=GSR rate_hz=128\n1\nabc\n", ""],
)
def test_load_trace_malformed(tmp_path, text):
    p = tmp_path / "t.csv"
    p.write_text(text)
    with pytest.raises(MalformedTrace):
        load_trace(p, SensorKind.GSR)


def test_write_load_roundtrip(tmp_path):
    x = np.random.default_rng(1).normal(size=100)
    tr = RawTrace(SensorKind.EMG_CH1, 512, x)
    write_trace(tmp_path / "e.csv", tr)
    back = load_trace(tmp_path / "e.csv", SensorKind.EMG_CH1)
    np.testing.assert_allclose(back.samples, x, rtol=1e-8)


def test_raw_trace_invariants():
    with pytest.raises(NonFinite):
        RawTrace(SensorKind.GSR, 128, [1.0, np.inf])
    with pytest.raises(ValueError):
        RawTrace(SensorKind.GSR, 0, [1.0])
    tr = RawTrace(SensorKind.GSR, 128, [1.0, 2.0])
    with pytest.raises(ValueError):
        tr.samples[0] = 5.0
    assert EXPECTED_RATES[SensorKind.EEG_RAW] == 512
    assert EXPECTED_RATES[SensorKind.GSR] == 128
    assert EXPECTED_RATES[SensorKind.EEG_ATTENTION] == 1


# --------------------------------------------------------------------------
# segmentation


def test_segment_trial_one():
    seg = segment_session(ProtocolTimeline())[0]
    assert seg.trial_index == 1
    assert seg.baseline_window == (3, 33)
    assert [(s, e) for _, s, e in seg.video_windows] == [(33, 93), (93, 153)]


def test_segment_trial_four():
    seg = segment_session(ProtocolTimeline())[3]
    assert seg.baseline_window[0] - 3 == 459
    assert seg.video_windows[-1][2] == 612


def test_segment_single_trial():
    segs = segment_session(ProtocolTimeline(trial_count=1, video_order=(24, 80)))
    assert len(segs) == 1 and len(segs[0].video_windows) == 2


@given(st.integers(1, 4), st.floats(0, 10), st.floats(1, 60), st.floats(1, 120))
def test_segments_disjoint_and_ordered(trials, screen, base, video):
    order = (24, 80, 41, 96, 63, 88, 56, 111)[: 2 * trials]
    tl = ProtocolTimeline(trials, order, screen, base, video)
    windows, seen = [], []
    for seg in segment_session(tl):
        windows.append(seg.baseline_window)
        for vid, s, e in seg.video_windows:
            windows.append((s, e))
            seen.append(vid)
    for (s0, e0), (s1, e1) in zip(windows, windows[1:]):
        assert s0 < e0 <= s1 < e1
    assert sorted(seen) == sorted(order)
    assert windows[-1][1] == pytest.approx(tl.total_duration_s)


def test_timeline_rejects_duplicates():
    with pytest.raises(ValueError):
        ProtocolTimeline(trial_count=1, video_order=(24, 24))


# --------------------------------------------------------------------------
# labels


@pytest.mark.parametrize("score,label", [(4.5, Label.LOW), (6.57, Label.HIGH), (5.2, Label.UNASSIGNED),
                                         (1.0, Label.LOW), (9.0, Label.HIGH), (6.0, Label.HIGH)])
def test_discretize(score, label):
    assert discretize_score(score) is label


@pytest.mark.parametrize("score", [0.99, 9.01, -3])
def test_discretize_out_of_range(score):
    with pytest.raises(OutOfRange):
        discretize_score(score)


_RANK = {Label.LOW: 0, Label.UNASSIGNED: 1, Label.HIGH: 2}


@given(st.floats(1, 9), st.floats(1, 9))
def test_discretize_monotone(a, b):
    lo, hi = sorted((a, b))
    assert _RANK[discretize_score(lo)] <= _RANK[discretize_score(hi)]


@pytest.mark.parametrize("vid,expected", [(24, (Label.HIGH, Label.LOW)), (96, (Label.LOW, Label.LOW)),
                                          (63, (Label.HIGH, Label.HIGH))])
def test_lookup_video_labels(vid, expected):
    assert lookup_video_labels(vid) == expected


def test_lookup_unknown_video():
    with pytest.raises(UnknownVideo):
        lookup_video_labels(999)


def test_default_table_matches_class_letters():
    assert sorted(DEFAULT_LABELS) == [24, 41, 56, 63, 80, 88, 96, 111]
    for name, videos in CLASS_VIDEOS.items():
        for vid in videos:
            valence, arousal = lookup_video_labels(vid)
            assert arousal is (Label.HIGH if name[0] == "H" else Label.LOW)
            assert valence is (Label.HIGH if name[2] == "H" else Label.LOW)


def test_class_ranges_one_sided():
    # every range sits wholly on one side of both thresholds
    for (a_lo, a_hi), (v_lo, v_hi) in CLASS_RANGES.values():
        for lo, hi in ((a_lo, a_hi), (v_lo, v_hi)):
            assert discretize_score(lo) is discretize_score(hi) is not Label.UNASSIGNED


def test_video_entry_range_checked():
    with pytest.raises(OutOfRange):
        VideoEntry(8.0, 8.0, "LALV")
