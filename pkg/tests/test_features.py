import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from capkit.augment import brightness
from capkit.errors import MalformedTensorFile
from capkit.features import (
    FeatureSequence,
    _channel_levels,
    read_features,
    sample_frame_indices,
    stub_extract,
    write_features,
)
from capkit.frames import FrameImage, VideoFrames, read_video_dir, write_video_dir


@pytest.mark.parametrize(
    "n, stride, expected",
    [(12, 5, [0, 5, 10]), (1, 5, [0]), (5, 1, [0, 1, 2, 3, 4])],
)
def test_sample_frame_indices(n, stride, expected):
    assert sample_frame_indices(n, stride) == expected


@given(st.integers(1, 500), st.integers(1, 20))
def test_sample_frame_indices_length(n, stride):
    idx = sample_frame_indices(n, stride)
    assert len(idx) == math.ceil(n / stride)
    assert all(i < n for i in idx)


@pytest.mark.parametrize("bins, levels", [(4, (2, 2, 1)), (8, (2, 2, 2)), (12, (3, 2, 2)), (7, (7, 1, 1)), (1536, (16, 12, 8))])
def test_channel_levels_product(bins, levels):
    assert sorted(_channel_levels(bins), reverse=True) == sorted(levels, reverse=True)
    assert math.prod(_channel_levels(bins)) == bins


def _video(frames, vid="v"):
    return VideoFrames(vid, tuple(frames))


def test_stub_identical_frames_identical_vectors():
    f = FrameImage(np.random.default_rng(0).integers(0, 256, (10, 12, 3)))
    seq = stub_extract(_video([f] * 6), stride=5, dim=32)
    assert len(seq) == 2
    np.testing.assert_array_equal(seq.vectors[0], seq.vectors[1])


def test_stub_black_frame_one_hot_darkest_bin():
    seq = stub_extract(_video([FrameImage.filled(8, 8, (0, 0, 0))]), dim=16)
    cells = seq.vectors[0].reshape(4, 4)
    np.testing.assert_array_equal(cells, np.tile([1.0, 0, 0, 0], (4, 1)))


def histogram_oracle(pixels, dim):
    """Count cell colours pixel by pixel with explicit loops."""
    bins = dim // 4
    qr, qg, qb = _channel_levels(bins)
    h, w, _ = pixels.shape
    out = []
    for r0, r1 in ((0, h // 2), (h // 2, h)):
        for c0, c1 in ((0, w // 2), (w // 2, w)):
            hist = [0.0] * bins
            for y in range(r0, r1):
                for x in range(c0, c1):
                    r, g, b = (int(v) for v in pixels[y, x])
                    hist[((r * qr // 256) * qg + g * qg // 256) * qb + b * qb // 256] += 1
            norm = math.sqrt(sum(v * v for v in hist))
            out.extend(v / norm if norm else 0.0 for v in hist)
    return np.array(out)


def test_stub_brightness_shift_against_counting_oracle():
    px = np.random.default_rng(4).integers(20, 120, (10, 10, 3)).astype(np.uint8)
    frame = FrameImage(px)
    bright = brightness(frame, 2.0)
    a = stub_extract(_video([frame]), dim=32).vectors[0]
    b = stub_extract(_video([bright]), dim=32).vectors[0]
    np.testing.assert_allclose(a, histogram_oracle(px, 32), atol=1e-15)
    np.testing.assert_allclose(b, histogram_oracle(bright.pixels, 32), atol=1e-15)
    assert not np.array_equal(a, b)


@settings(max_examples=30, deadline=None)
@given(
    arrays(np.uint8, st.tuples(st.integers(2, 9), st.integers(2, 9), st.just(3)), elements=st.integers(0, 255)),
    st.sampled_from([8, 16, 32, 48]),
)
def test_stub_cells_have_unit_norm(px, dim):
    vec = stub_extract(_video([FrameImage(px)]), dim=dim).vectors[0]
    for cell in vec.reshape(4, dim // 4):
        assert abs(np.linalg.norm(cell) - 1.0) <= 1e-12


def test_stub_single_row_frame_has_empty_cells():
    vec = stub_extract(_video([FrameImage.filled(4, 1, (9, 9, 9))]), dim=8).vectors[0].reshape(4, 2)
    assert np.all(vec[:2] == 0)  # top row of cells is empty
    assert np.allclose(np.linalg.norm(vec[2:], axis=1), 1.0)


@pytest.mark.parametrize("dim", [4, 10, 0])
def test_stub_dim_precondition(dim):
    with pytest.raises(ValueError):
        stub_extract(_video([FrameImage.filled(4, 4, (0, 0, 0))]), dim=dim)


@given(arrays(np.float32, st.tuples(st.integers(1, 5), st.integers(1, 7)), elements=st.floats(-1e6, 1e6, width=32)))
def test_feature_file_round_trip(tmp_path_factory, vecs):
    path = tmp_path_factory.mktemp("f") / "vid.ften"
    seq = FeatureSequence("vid", vecs)
    write_features(path, seq)
    back = read_features(path)
    assert back == seq
    assert back.vectors.tobytes() == vecs.tobytes()


def test_feature_file_layout(tmp_path):
    path = tmp_path / "a.ften"
    write_features(path, FeatureSequence("a", np.array([[1.0, 2.0]], dtype=np.float32)))
    raw = path.read_bytes()
    assert raw[:4] == b"FTEN"
    assert raw[4:12] == (1).to_bytes(4, "little") + (2).to_bytes(4, "little")
    assert raw[12:] == np.array([1.0, 2.0], dtype="<f4").tobytes()


def test_feature_file_truncated(tmp_path):
    path = tmp_path / "t.ften"
    write_features(path, FeatureSequence("t", np.ones((3, 4), dtype=np.float32)))
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(MalformedTensorFile):
        read_features(path)


def test_feature_file_zero_dim_and_bad_magic(tmp_path):
    p = tmp_path / "z.ften"
    p.write_bytes(b"FTEN" + (1).to_bytes(4, "little") + (0).to_bytes(4, "little"))
    with pytest.raises(MalformedTensorFile):
        read_features(p)
    q = tmp_path / "m.ften"
    q.write_bytes(b"NOPE" + bytes(8))
    with pytest.raises(MalformedTensorFile):
        read_features(q)


def test_feature_sequence_rejects_non_finite():
    with pytest.raises(ValueError):
        FeatureSequence("x", np.array([[np.nan]]))


def test_video_dir_round_trip(tmp_path):
    frames = [FrameImage(np.random.default_rng(i).integers(0, 256, (5, 6, 3))) for i in range(3)]
    paths = write_video_dir(tmp_path / "clip", _video(frames, "clip"))
    assert [p.name for p in paths] == ["000000.ppm", "000001.ppm", "000002.ppm"]
    assert paths[0].read_bytes().startswith(b"P6")
    back = read_video_dir(tmp_path / "clip")
    assert back.video_id == "clip"
    assert back == _video(frames, "clip")
