import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from xepr.gaussian import CovarianceState, LossSpec, dense_circuit
from xepr.graph import (
    ComplexGraph,
    GraphError,
    build_G,
    build_ZC,
    build_ZE,
    check_nullifiers,
    interior,
    is_bipartite_by_parity,
    modes_of_bins,
    phase_shift_transform,
    z_from_covariance,
)

N = 8


@pytest.mark.parametrize("periodic", [False, True])
def test_G_structure(periodic):
    g = build_G(N, periodic)
    assert np.array_equal(g, g.T)
    assert is_bipartite_by_parity(g, N)
    g2 = g @ g
    inner = interior(N)
    assert np.array_equal(g2[np.ix_(inner, inner)], np.eye(len(inner)))
    if periodic:
        assert np.array_equal(g2, np.eye(2 * N))


def test_open_G_not_self_inverse_at_ends():
    g = build_G(N)
    assert not np.allclose((g @ g)[:2, :2], np.eye(2))


def test_odd_ring_is_not_bipartite():
    assert not is_bipartite_by_parity(build_G(5, periodic=True), 5)


@pytest.mark.parametrize("builder", [build_ZE, build_ZC])
def test_r_zero_is_vacuum_graph(builder):
    assert np.allclose(builder(N, 0.0).Z, 1j * np.eye(2 * N))


def test_negative_r_rejected():
    with pytest.raises(ValueError):
        build_ZE(N, -0.1)
    with pytest.raises(ValueError):
        build_G(2)


@pytest.mark.parametrize("r", [0.2, 0.6, 1.1])
def test_extracted_graph_matches_formula(r):
    ring = dense_circuit(N, r, r, boundary="ring")
    z = z_from_covariance(ring)
    assert np.abs(z.Z - build_ZE(N, r, periodic=True).Z).max() < 1e-9
    inner = interior(N)
    diff = (z.Z - build_ZE(N, r).Z)[np.ix_(inner, inner)]
    assert np.abs(diff).max() < 1e-9


@pytest.mark.parametrize("parity", [0, 1])
def test_phase_shift_gives_cluster_graph(parity):
    r = 0.6
    ze = build_ZE(N, r, periodic=True)
    zc = phase_shift_transform(ze, modes_of_bins(range(parity, N, 2)), -np.pi / 2)
    assert np.abs(zc.Z - build_ZC(N, r, periodic=True).Z).max() < 1e-9


def test_phase_shift_roundtrip():
    ze = build_ZE(N, 0.4)
    modes = modes_of_bins(range(1, N, 2))
    back = phase_shift_transform(phase_shift_transform(ze, modes, -np.pi / 2), modes, np.pi / 2)
    assert np.allclose(back.Z, ze.Z)


@given(st.floats(0.0, 1.5))
def test_graph_covariance_roundtrip_and_nullifiers(r):
    ze = build_ZE(N, r)
    state = ze.to_covariance()
    assert state.is_pure(1e-7)
    back = z_from_covariance(state)
    assert np.allclose(back.Z, ze.Z, atol=1e-8)
    assert check_nullifiers(ze, state).residual < 1e-9


def test_approximate_nullifiers_decay():
    r = 1.0
    ring = dense_circuit(N, r, r, boundary="ring")
    chk = check_nullifiers(z_from_covariance(ring), ring, build_G(N, periodic=True))
    # with G^2 = I, (I - G) V_xx (I - G) = e^{-2r} (I - G) / 2; G has zero diagonal
    assert np.allclose(chk.approx_x, np.exp(-2 * r) / 2)
    assert np.allclose(chk.approx_p, np.exp(-2 * r) / 2)


def test_mixed_state_rejected():
    with pytest.raises(GraphError):
        z_from_covariance(dense_circuit(4, 0.5, 0.5, LossSpec.nominal(), boundary="ring"))


def test_nonzero_mean_rejected():
    s = CovarianceState.vacuum(2)
    with pytest.raises(GraphError):
        z_from_covariance(CovarianceState(np.ones(4), s.cov))


def test_vacuum_state_graph():
    assert np.allclose(z_from_covariance(CovarianceState.vacuum(3)).Z, 1j * np.eye(3))


def test_json_export():
    g = build_ZE(3, 0.5)
    data = json.loads(g.to_json(r=0.5))
    assert data["r"] == 0.5
    assert len(data["nodes"]) == 6
    e = data["edges"][0]
    assert set(e) == {"source", "target", "weight"}
    assert ComplexGraph(g.Z).symmetry_error() == 0
