import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rnnpb.errors import DimensionMismatchError, StreamError
from rnnpb.network import ModelSnapshot, NetworkTopology, PBState, WeightMatrices
from rnnpb.recognition import (
    RecognitionConfig,
    nearest,
    pb_descent,
    pb_distance,
    recognize,
    recognize_stream,
)


def test_distance_examples():
    p = PBState.from_activation([0.1, 0.1])
    q = PBState.from_activation([0.4, 0.5])
    assert pb_distance(p, p) == 0.0
    assert pb_distance(p, q) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(DimensionMismatchError):
        pb_distance(p, PBState.zeros(3))


@settings(max_examples=50)
@given(st.lists(st.floats(-20, 20), min_size=4, max_size=4))
def test_distance_symmetric(vals):
    p, q = PBState(np.array(vals[:2])), PBState(np.array(vals[2:]))
    assert pb_distance(p, q) == pb_distance(q, p)
    assert pb_distance(p, q) >= 0


def test_nearest_tie_breaks_lexicographically():
    top = NetworkTopology(1, 1, 1)
    model = ModelSnapshot(top, WeightMatrices.zeros(top),
                          pb_table={"b": PBState.from_activation([0.3]), "a": PBState.from_activation([0.7])})
    label, dists = nearest(model, PBState.zeros(1))
    assert dists["a"] == pytest.approx(dists["b"])
    assert label == "a"


def test_config_validation():
    with pytest.raises(ValueError):
        RecognitionConfig(window=0)
    with pytest.raises(ValueError):
        RecognitionConfig(stop_patience=0)
    assert RecognitionConfig.case2().stop_threshold == 0.1


def test_recognizes_training_sequences(small_model, small_corpus):
    snap, _ = small_model
    for seq in small_corpus:
        result = recognize(snap, seq, RecognitionConfig(window=59))
        assert result.nearest_label == seq.label
        assert result.distance_to_labels[seq.label] == min(result.distance_to_labels.values())


def test_weights_frozen(small_model, small_corpus):
    snap, _ = small_model
    before = snap.weights.checksum()
    recognize(snap, small_corpus[0], RecognitionConfig(max_iters=50))
    list(recognize_stream(snap, small_corpus[1].values, RecognitionConfig(window=10)))
    assert snap.weights.checksum() == before


def test_zero_rate_stays_at_half(small_model, small_corpus):
    snap, _ = small_model
    cfg = RecognitionConfig(eta_r=0.0, stop_patience=5)
    result = recognize(snap, small_corpus[0], cfg)
    assert result.converged and result.iterations == 5
    assert np.all(result.pb_trajectory == 0.5)
    assert np.all(result.pb.rho == 0.0)


def test_trajectory_and_convergence_invariant(small_model, small_corpus):
    snap, _ = small_model
    cfg = RecognitionConfig(stop_threshold=1e-3, stop_patience=20, max_iters=3000)
    result = recognize(snap, small_corpus[1], cfg)
    assert result.pb_trajectory.shape == (result.iterations, 2)
    assert result.converged
    tail = result.pb_trajectory[-cfg.stop_patience:]
    for i in range(len(tail)):
        for j in range(len(tail)):
            assert np.max(np.abs(tail[i] - tail[j])) < cfg.stop_threshold


def test_deterministic(small_model, small_corpus):
    snap, _ = small_model
    a = recognize(snap, small_corpus[0], RecognitionConfig(max_iters=200))
    b = recognize(snap, small_corpus[0], RecognitionConfig(max_iters=200))
    assert a.pb == b.pb and np.array_equal(a.pb_trajectory, b.pb_trajectory)


def test_window_only_sees_last_frames(small_model, small_corpus):
    """Frames before the window cannot influence the update."""
    snap, _ = small_model
    seq = small_corpus[0].values
    junk = np.random.default_rng(0).uniform(0, 1, (25, 3))
    cfg = RecognitionConfig(window=seq.shape[0] - 1, max_iters=40)
    a = recognize(snap, seq, cfg)
    b = recognize(snap, np.vstack([junk, seq]), cfg)
    assert np.array_equal(a.pb_trajectory, b.pb_trajectory)


def test_pb_descent_matches_finite_differences(small_model, small_corpus):
    snap, _ = small_model
    frames = small_corpus[0].values[:12]
    rho = np.array([0.3, -0.4])
    delta, _ = pb_descent(snap.weights, frames, rho)
    h = 1e-6
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        fd = (pb_descent(snap.weights, frames, rho + e)[1] - pb_descent(snap.weights, frames, rho - e)[1]) / (2 * h)
        assert -delta[:, i].sum() == pytest.approx(fd, rel=1e-5, abs=1e-10)


def test_dimension_mismatch(small_model):
    snap, _ = small_model
    with pytest.raises(DimensionMismatchError):
        recognize(snap, np.zeros((10, 4)))


# -- streaming --------------------------------------------------------------------

def test_stream_exactly_window_frames_emits_nothing(small_model, small_corpus):
    snap, _ = small_model
    cfg = RecognitionConfig(window=10)
    assert list(recognize_stream(snap, small_corpus[0].values[:10], cfg)) == []
    out = list(recognize_stream(snap, small_corpus[0].values[:11], cfg))
    assert [t for t, _, _ in out] == [10]


def test_stream_dimension_error_names_frame(small_model, small_corpus):
    snap, _ = small_model
    frames = list(small_corpus[0].values[:15]) + [np.zeros(2)]
    with pytest.raises(StreamError, match="frame 15"):
        list(recognize_stream(snap, frames, RecognitionConfig(window=5)))


def test_stream_zero_model_constant_feed():
    top = NetworkTopology(3, 4, 2)
    model = ModelSnapshot(top, WeightMatrices.zeros(top), pb_table={"a": PBState.zeros(2)})
    feed = [np.array([0.2, 0.7, 0.4])] * 30
    out = list(recognize_stream(model, feed, RecognitionConfig(window=5)))
    assert len(out) == 25
    assert all(np.all(pb.activation() == 0.5) for _, pb, _ in out)


def test_stream_tracks_label(small_model, small_corpus):
    snap, _ = small_model
    seq = small_corpus[1]
    feed = np.vstack([seq.values] * 3)
    cfg = RecognitionConfig(window=20, eta_r=0.05, iters_per_frame=5)
    out = list(recognize_stream(snap, feed, cfg))
    after_first = [label for t, _, label in out if t >= seq.length]
    assert after_first and all(label == seq.label for label in after_first)


def test_stream_deterministic(small_model, small_corpus):
    snap, _ = small_model
    cfg = RecognitionConfig(window=8)
    a = [(t, pb.rho.tobytes(), lab) for t, pb, lab in recognize_stream(snap, small_corpus[0].values, cfg)]
    b = [(t, pb.rho.tobytes(), lab) for t, pb, lab in recognize_stream(snap, small_corpus[0].values, cfg)]
    assert a == b
