from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gridlcu.errors import BinIndexError, DegenerateStateError, DomainError, ResourceError, ShapeError
from gridlcu.grid import (
    GridSpec,
    StateVector,
    centroid,
    discretize,
    dumps_state,
    inner_product,
    load_state,
    nearest_centroid,
    save_state,
)
from gridlcu.oracle import gaussian_state, truncated_gaussian


def test_spec_validation():
    g = GridSpec(2, 3, 4, 2.0)
    assert g.spacing * g.bins == g.length
    assert g.masses == (1.0, 1.0)
    assert g.dimension == 4**6
    with pytest.raises(ResourceError):
        GridSpec(4, 3, 8, 1.0)
    with pytest.raises(DomainError):
        GridSpec(0, 1, 4, 1.0)
    with pytest.raises(DomainError):
        GridSpec(1, 1, 4, -1.0)
    with pytest.raises(ShapeError):
        GridSpec(2, 1, 4, 1.0, (1.0,))


def test_centroid_examples():
    g = GridSpec(1, 1, 5, 1.0)
    assert centroid(g, [0])[0] == pytest.approx(0.1)
    assert centroid(g, [4])[0] == pytest.approx(0.9)
    with pytest.raises(BinIndexError):
        centroid(g, [5])
    g2 = GridSpec(1, 2, 5, 1.0)
    assert np.allclose(centroid(g2, [2, 1]), [0.5, 0.3])


def test_nearest_centroid_ties_and_domain():
    g = GridSpec(1, 1, 5, 1.0)
    assert nearest_centroid(g, [0.2]) == (0,)
    assert nearest_centroid(g, [0.0]) == (0,)
    assert nearest_centroid(g, [1.0]) == (4,)
    assert nearest_centroid(g, [0.5]) == (2,)
    with pytest.raises(DomainError):
        nearest_centroid(g, [1.01])


def test_nearest_centroid_against_brute_force(rng):
    g = GridSpec(1, 2, 5, 1.0)
    cents = [(idx, centroid(g, idx)) for idx in itertools.product(range(5), repeat=2)]
    for _ in range(1000):
        x = rng.uniform(0, 1, size=2)
        # strict argmin over all centroids, first index on ties
        best = min(cents, key=lambda c: float(np.sum((c[1] - x) ** 2)))[0]
        assert nearest_centroid(g, x) == best


@given(st.integers(1, 3), st.integers(2, 6), st.floats(0.5, 10))
def test_centroid_round_trip(dims, bins, length):
    g = GridSpec(1, dims, bins, length)
    for flat in range(g.dimension):
        idx = g.bin_index(flat)
        assert nearest_centroid(g, centroid(g, idx)) == idx
        assert g.flat_index(idx) == flat


@given(st.lists(st.floats(0, 1), min_size=2, max_size=2))
def test_nearest_within_half_spacing(x):
    g = GridSpec(2, 1, 7, 1.0)
    c = centroid(g, nearest_centroid(g, x))
    assert np.max(np.abs(c - np.asarray(x))) <= g.spacing / 2 + 1e-12


def test_flat_index_is_particle_major():
    g = GridSpec(2, 2, 3, 1.0)
    assert g.flat_index([0, 0, 0, 1]) == 1
    assert g.flat_index([1, 0, 0, 0]) == 27
    assert g.axis(1, 0) == 2


def test_discretize_constant_and_plane_wave():
    g = GridSpec(1, 2, 6, 2.0)
    st_ = discretize(g, lambda x: np.full(len(x), 1 / g.length))
    assert st_.norm_sq == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(st_.amplitudes, st_.amplitudes[0])
    g1 = GridSpec(1, 1, 9, 3.0)
    k = 2 * math.pi * 2 / 3.0
    pw = discretize(g1, lambda x: np.exp(1j * k * x[:, 0]) / math.sqrt(3.0))
    assert pw.normalized


def test_discretize_renormalize():
    g = GridSpec(1, 1, 8, 1.0)
    s = discretize(g, lambda x: 3.0 + x[:, 0], renormalize=True)
    assert abs(s.norm_sq - 1) < 1e-12
    with pytest.raises(DegenerateStateError):
        discretize(g, lambda x: np.zeros(len(x)), renormalize=True)


@given(st.floats(0.5, 3.0), st.integers(8, 40))
def test_renormalized_norm(scale, bins):
    g = GridSpec(1, 1, bins, 2.0)
    s = discretize(g, lambda x: scale * np.cos(x[:, 0]) + 2j, renormalize=True)
    assert abs(s.norm_sq - 1) <= 1e-12


def test_gaussian_norm_within_midpoint_envelope():
    delta_p, kmax, length = 1.0, 6.0, 12.0
    for bins in (24, 48, 96):
        g = GridSpec(1, 1, bins, length)
        h = g.spacing
        raw = discretize(g, lambda x: truncated_gaussian(x[:, 0], delta_p, kmax, length / 2))
        # high resolution reference for the continuous norm
        fine = np.linspace(0, length, 24001)
        ref = np.trapezoid(np.abs(truncated_gaussian(fine, delta_p, kmax, length / 2)) ** 2, fine)
        envelope = h**2 * (6 + 2 * math.sqrt(5)) * kmax**2 * (kmax * length / math.pi) / (72 * math.sqrt(5))
        assert abs(raw.norm_sq - ref) <= envelope
        assert gaussian_state(delta_p, kmax, g).normalized


def test_inner_product_properties(rng):
    g = GridSpec(1, 2, 3, 1.0)
    a = StateVector(rng.normal(size=9) + 1j * rng.normal(size=9), g)
    b = StateVector(rng.normal(size=9) + 1j * rng.normal(size=9), g)
    assert inner_product(a, a).real == pytest.approx(a.norm_sq)
    assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)))
    e0, e1 = np.eye(9)[0], np.eye(9)[1]
    assert inner_product(StateVector(e0, g), StateVector(e1, g)) == 0
    with pytest.raises(ShapeError):
        inner_product(a, StateVector(np.ones(16), GridSpec(1, 2, 4, 1.0)))


def test_state_is_immutable(rng):
    g = GridSpec(1, 1, 4, 1.0)
    s = StateVector(np.ones(4), g)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 2
    with pytest.raises(ShapeError):
        StateVector(np.ones(5), g)


def test_serialization_round_trip(tmp_path, rng):
    g = GridSpec(2, 1, 4, 1.5, (1.0, 2.0))
    s = StateVector(rng.normal(size=16) + 1j * rng.normal(size=16), g)
    path = tmp_path / "state.bin"
    save_state(s, path)
    raw = path.read_bytes()
    header, body = raw.split(b"\n", 1)
    assert b'"bins": 4' in header and len(body) == 16 * 16
    assert np.frombuffer(body, "<f8")[1] == s.amplitudes[0].imag
    back = load_state(path, masses=(1.0, 2.0))
    assert np.array_equal(back.amplitudes, s.amplitudes)
    assert back.grid == g
    assert dumps_state(back) == raw
