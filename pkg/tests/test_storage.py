import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from relflow.storage import (
    BadMagicError,
    HeaderMismatchError,
    PointsParseError,
    TruncatedError,
    read_image,
    read_points,
    read_trajectory_csv,
    write_image,
    write_points,
    write_trajectory_csv,
)


def test_float_round_trip(tmp_path, nprng):
    img = nprng.random((64, 64)).astype(np.float32)
    write_image(tmp_path / "a.rfimg", img)
    back = read_image(tmp_path / "a.rfimg")
    assert back.dtype == np.float32 and np.array_equal(back, img)


def test_pgm_round_trip(tmp_path, nprng):
    img = nprng.random((17, 23))
    write_image(tmp_path / "a.pgm", img)
    blob = (tmp_path / "a.pgm").read_bytes()
    assert blob.startswith(b"P5\n23 17\n65535\n")
    err = np.abs(read_image(tmp_path / "a.pgm") - img).max()
    assert err <= 1 / (2 * 65535) + 1e-15
    assert 1 / (2 * 65535) == pytest.approx(7.63e-6, rel=1e-3)


def test_image_errors(tmp_path):
    img = np.full((4, 5), 0.5)
    write_image(tmp_path / "a.rfimg", img)
    with pytest.raises(BadMagicError):
        read_image(tmp_path / "a.rfimg", "pgm")
    blob = (tmp_path / "a.rfimg").read_bytes()
    (tmp_path / "t.rfimg").write_bytes(blob[:-4])
    with pytest.raises(TruncatedError):
        read_image(tmp_path / "t.rfimg")
    (tmp_path / "m.rfimg").write_bytes(blob + b"\0\0\0\0")
    with pytest.raises(HeaderMismatchError):
        read_image(tmp_path / "m.rfimg")
    write_image(tmp_path / "a.pgm", img)
    with pytest.raises(BadMagicError):
        read_image(tmp_path / "a.pgm", "float")
    (tmp_path / "t.pgm").write_bytes((tmp_path / "a.pgm").read_bytes()[:-1])
    with pytest.raises(TruncatedError):
        read_image(tmp_path / "t.pgm")


@settings(max_examples=25, deadline=None)
@given(arrays(np.float32, st.tuples(st.integers(1, 12), st.integers(1, 12)),
              elements=st.floats(0, 1, width=32)))
def test_image_round_trip_property(tmp_path_factory, img):
    d = tmp_path_factory.mktemp("img")
    write_image(d / "x.rfimg", img)
    assert np.array_equal(read_image(d / "x.rfimg"), img)
    write_image(d / "x.pgm", img)
    assert np.abs(read_image(d / "x.pgm") - img).max() <= 1 / (2 * 65535) + 1e-7


def test_points(tmp_path):
    write_points(tmp_path / "e.csv", np.empty((0, 2)))
    assert (tmp_path / "e.csv").read_text() == "x,y\n"
    assert read_points(tmp_path / "e.csv").shape == (0, 2)
    write_points(tmp_path / "p.csv", [[1 / 3, 2 / 3]])
    assert np.allclose(read_points(tmp_path / "p.csv"), [[1 / 3, 2 / 3]], atol=1e-7, rtol=0)
    (tmp_path / "bad.csv").write_text("x,y\na,b\n")
    with pytest.raises(PointsParseError, match="line 2") as e:
        read_points(tmp_path / "bad.csv")
    assert e.value.line == 2


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(0, 20), st.just(2)), elements=st.floats(-10, 10)))
def test_points_round_trip_property(tmp_path_factory, pts):
    d = tmp_path_factory.mktemp("pts")
    write_points(d / "p.csv", pts)
    back = read_points(d / "p.csv")
    assert back.shape == pts.shape
    assert np.all(np.abs(back - pts) <= 1e-7 * np.maximum(1, np.abs(pts)))


def test_trajectory_csv(tmp_path):
    states = [np.arange(6.0).reshape(3, 2) + k for k in range(4)]
    write_trajectory_csv(tmp_path / "t.csv", states)
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "step,index,dim0,dim1" and len(lines) == 1 + 12
    back = read_trajectory_csv(tmp_path / "t.csv")
    assert len(back) == 4 and all(np.array_equal(a, b) for a, b in zip(back, states))
