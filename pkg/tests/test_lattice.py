import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sfperc import LatticeBox, ball_offsets, shell_counts, unit_ball_volume
from sfperc.errors import DomainError


def test_point_index():
    box = LatticeBox(2, 10, "free")
    assert box.point_to_index((0, 0)) == 0
    assert box.point_to_index((3, 7)) == 37
    with pytest.raises(DomainError):
        box.point_to_index((10, 0))


def test_displacement_norm():
    assert LatticeBox(2, 10, "free").displacement_norm((0, 0), (3, 4)) == 5.0
    assert LatticeBox(1, 10, "torus").displacement_norm((1,), (9,)) == 2.0
    assert LatticeBox(3, 7).displacement_norm((2, 2, 2), (2, 2, 2)) == 0.0


def test_ball_indices():
    box1 = LatticeBox(1, 20, "free")
    assert LatticeBox(2, 10, "free").ball_indices((5, 5), 0).size == 0
    assert box1.ball_indices((10,), 2).tolist() == [8, 9, 11, 12]
    box2 = LatticeBox(2, 10, "free")
    got = box2.ball_indices((5, 5), 1.5)
    expected = sorted(box2.point_to_index((5 + a, 5 + b))
                      for a in (-1, 0, 1) for b in (-1, 0, 1) if (a, b) != (0, 0))
    assert got.tolist() == expected


def test_ball_volume_consistency():
    box = LatticeBox(2, 201, "free")
    n = box.ball_indices((100, 100), 50).size
    assert abs(n / (unit_ball_volume(2) * 50**2) - 1) < 0.05


def test_ball_offsets_order():
    offs, n2 = ball_offsets(2, 3)
    assert np.all(np.diff(n2) >= 0)
    assert np.array_equal(n2, np.sum(offs * offs, axis=1))
    assert offs.shape[0] == LatticeBox(2, 7, "free").ball_indices((3, 3), 3).size


@pytest.mark.parametrize("d,r", [(1, 10), (2, 7.5), (3, 4)])
def test_shell_counts(d, r):
    offs, n2 = ball_offsets(d, r)
    vals, counts = shell_counts(d, r)
    ref_vals, ref_counts = np.unique(n2, return_counts=True)
    assert np.array_equal(vals, ref_vals)
    assert np.array_equal(counts, ref_counts)


points2 = st.tuples(st.integers(0, 8), st.integers(0, 8))


@given(p=points2, q=points2, z=points2, boundary=st.sampled_from(["free", "torus"]))
def test_metric_axioms(p, q, z, boundary):
    box = LatticeBox(2, 9, boundary)
    dpq = box.displacement_norm(p, q)
    assert dpq == box.displacement_norm(q, p)
    assert (dpq == 0) == (p == q)
    assert dpq <= box.displacement_norm(p, z) + box.displacement_norm(z, q) + 1e-12
    if boundary == "torus":
        assert dpq <= 9 / 2 * math.sqrt(2)


@given(i=st.integers(0, 999))
def test_index_roundtrip(i):
    box = LatticeBox(3, 10)
    assert box.point_to_index(box.index_to_point(i)) == i
    assert box.indices_of(box.coordinates([i]))[0] == i
