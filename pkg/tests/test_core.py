import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from flatnormals.core import (CameraIntrinsics, DepthImage, LabelMap, NormalMap, angle_between,
                              normalize, planar_class_set)
from flatnormals.errors import (DegenerateVectorError, FormatError, LabelError,
                                NonFiniteVectorError, ShapeError)

finite = st.floats(-1e3, 1e3, allow_nan=False)
vectors = st.tuples(finite, finite, finite).filter(lambda v: math.hypot(*v) > 1e-6)


@pytest.mark.parametrize("a, b, expected", [
    ((0, 0, 1), (0, 0, 1), 0.0),
    ((0, 0, 1), (0, 1, 0), 90.0),
    ((0, 0, 1), (0, 0, -1), 180.0),
])
def test_angle_between_examples(a, b, expected):
    assert angle_between(a, b) == pytest.approx(expected, abs=1e-12)


def test_angle_between_rejects_nan():
    with pytest.raises(NonFiniteVectorError, match="non-finite vector"):
        angle_between((np.nan, 0, 1), (0, 0, 1))


def test_normalize_examples():
    np.testing.assert_allclose(normalize((0, 0, 2)), [0, 0, 1])
    np.testing.assert_allclose(normalize((3, 4, 0)), [0.6, 0.8, 0])
    with pytest.raises(DegenerateVectorError, match="degenerate vector"):
        normalize((1e-15, 0, 0))


@given(vectors, vectors)
def test_angle_symmetric_and_self_zero(a, b):
    a, b = normalize(a), normalize(b)
    assert angle_between(a, b) == pytest.approx(angle_between(b, a), abs=1e-9)
    assert angle_between(a, a) == pytest.approx(0.0, abs=1e-5)
    assert angle_between(a, -a) == pytest.approx(180.0, abs=1e-5)


@given(vectors)
def test_normalize_idempotent(v):
    n = normalize(v)
    np.testing.assert_allclose(normalize(n), n, atol=1e-12)
    assert abs(np.linalg.norm(n) - 1) <= 1e-12


def test_intrinsics_validation():
    CameraIntrinsics(500, 500, 160, 120, 320, 240)
    with pytest.raises(FormatError):
        CameraIntrinsics(-1, 500, 160, 120, 320, 240)
    with pytest.raises(FormatError):
        CameraIntrinsics(500, 500, 320, 120, 320, 240)


def test_depth_image_invariants():
    with pytest.raises(ShapeError):
        DepthImage(np.ones((2, 2)), np.ones((2, 3), bool))
    with pytest.raises(FormatError):
        DepthImage(np.array([[0.0, 1.0]]), np.array([[True, True]]))
    d = DepthImage.from_depth(np.array([[0.0, 2.0, np.nan]]))
    assert d.valid.tolist() == [[False, True, False]]


def test_normal_map_zeroes_invalid():
    nm = NormalMap(np.ones((1, 2, 3)), np.array([[True, False]]))
    assert nm.normals[0, 1].tolist() == [0, 0, 0]


def test_label_map_domain():
    LabelMap(np.array([[0, 13, 255]]))
    with pytest.raises(LabelError):
        LabelMap(np.array([[14]]))
    with pytest.raises(LabelError):
        planar_class_set({3, 20})
