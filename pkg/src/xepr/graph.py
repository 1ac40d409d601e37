"""Complex-weighted graph (Z-matrix) representation of Gaussian pure states.

A zero-mean pure state has position wavefunction ``psi(s) ~ exp(i s^T Z s)``
(hbar = 1/2) and satisfies ``(p - Z x)|psi> = 0``.  Graph nodes use the same
time-major, rail-minor ordering as :mod:`xepr.gaussian`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .gaussian import VACUUM_VAR, CovarianceState, ModeIndex, rotation_matrix

COND_LIMIT = 1e10


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class ComplexGraph:
    Z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.Z, dtype=complex)
        if z.ndim != 2 or z.shape[0] != z.shape[1]:
            raise GraphError(f"Z must be square, got {z.shape}")
        object.__setattr__(self, "Z", z)

    @property
    def n_modes(self) -> int:
        return self.Z.shape[0]

    def symmetry_error(self) -> float:
        return float(np.abs(self.Z - self.Z.T).max())

    def min_imag_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.Z.imag + self.Z.imag.T)).min())

    def to_covariance(self) -> CovarianceState:
        """Covariance of the pure state described by Z (interleaved ordering)."""
        u, v = self.Z.real, self.Z.imag
        vinv = np.linalg.inv(v)
        n = self.n_modes
        xx = VACUUM_VAR * vinv
        px = VACUUM_VAR * u @ vinv
        pp = VACUUM_VAR * (v + u @ vinv @ u)
        cov = np.zeros((2 * n, 2 * n))
        cov[0::2, 0::2] = xx
        cov[1::2, 0::2] = px
        cov[0::2, 1::2] = px.T
        cov[1::2, 1::2] = pp
        return CovarianceState(np.zeros(2 * n), cov)

    def edges(self, tol: float = 1e-14) -> list[dict]:
        out = []
        n = self.n_modes
        for i in range(n):
            for j in range(i, n):
                w = self.Z[i, j]
                if abs(w) > tol:
                    a, b = ModeIndex.from_flat(i), ModeIndex.from_flat(j)
                    out.append(
                        {
                            "source": [a.rail.name, a.k],
                            "target": [b.rail.name, b.k],
                            "weight": [float(w.real), float(w.imag)],
                        }
                    )
        return out

    def to_json(self, **extra) -> str:
        nodes = [[ModeIndex.from_flat(i).rail.name, ModeIndex.from_flat(i).k] for i in range(self.n_modes)]
        return json.dumps({"nodes": nodes, "edges": self.edges(), **extra}, indent=2)


def _check_nbins(nbins: int):
    if nbins < 3:
        raise ValueError("graph construction needs at least three time bins")


def build_G(nbins: int, periodic: bool = False) -> np.ndarray:
    """Ideal real graph of the extended EPR chain (weights +-1/2 between consecutive bins).

    Between bin k and k+1 the block, rows (A_k, B_k) and columns (A_{k+1}, B_{k+1}), is
    ``1/2 [[-1, 1], [-1, 1]]``.  ``periodic`` closes the chain into a ring (even ``nbins``
    keeps it bipartite).
    """
    _check_nbins(nbins)
    n = 2 * nbins
    g = np.zeros((n, n))
    fwd = 0.5 * np.array([[-1.0, 1.0], [-1.0, 1.0]])
    links = nbins if periodic else nbins - 1
    for k in range(links):
        k1 = (k + 1) % nbins
        g[2 * k:2 * k + 2, 2 * k1:2 * k1 + 2] += fwd
        g[2 * k1:2 * k1 + 2, 2 * k:2 * k + 2] += fwd.T
    return g


def build_ZE(nbins: int, r: float, periodic: bool = False) -> ComplexGraph:
    """Z_E = i cosh(2r) I - i sinh(2r) G."""
    if r < 0:
        raise ValueError("squeezing parameter must be non-negative")
    g = build_G(nbins, periodic)
    return ComplexGraph(1j * np.cosh(2 * r) * np.eye(len(g)) - 1j * np.sinh(2 * r) * g)


def build_ZC(nbins: int, r: float, periodic: bool = False) -> ComplexGraph:
    """Z_C = i sech(2r) I + tanh(2r) G."""
    if r < 0:
        raise ValueError("squeezing parameter must be non-negative")
    g = build_G(nbins, periodic)
    return ComplexGraph(1j / np.cosh(2 * r) * np.eye(len(g)) + np.tanh(2 * r) * g)


def interior(nbins: int) -> np.ndarray:
    """Node indices of every bin except the first and the last."""
    return np.arange(2, 2 * nbins - 2)


def is_bipartite_by_parity(g: np.ndarray, nbins: int) -> bool:
    """No edge joins two nodes whose temporal indices have the same parity."""
    parity = np.repeat(np.arange(nbins) % 2, 2)
    same = parity[:, None] == parity[None, :]
    return bool(np.all(g[same] == 0))


def z_from_covariance(state: CovarianceState, purity_tol: float = 1e-8) -> ComplexGraph:
    """Recover Z from a zero-mean pure state: ``Z = V_px V_xx^-1 + (i/4) V_xx^-1``."""
    if np.abs(state.mean).max(initial=0.0) > 1e-12:
        raise GraphError("Z-graph extraction needs a zero-mean state")
    if not state.is_pure(purity_tol):
        raise GraphError("state is not pure; no graph representation")
    vxx = state.cov[0::2, 0::2]
    vpx = state.cov[1::2, 0::2]
    cond = np.linalg.cond(vxx)
    if cond > COND_LIMIT:
        raise GraphError(f"x-block is ill-conditioned (cond={cond:.3g})")
    vinv = np.linalg.inv(vxx)
    z = vpx @ vinv + 1j * VACUUM_VAR * vinv
    return ComplexGraph(0.5 * (z + z.T))


def phase_shift_transform(graph: ComplexGraph, modes: Iterable[int], angle: float) -> ComplexGraph:
    """Phase-shift the selected modes by ``angle`` and return the new graph.

    A phase shift by ``angle`` multiplies the mode's annihilation operator by
    ``exp(-i angle)``; as a moment map that is a rotation by ``-angle``
    (so -pi/2 sends x -> -p, p -> x).  Computed through the covariance.
    """
    if graph.min_imag_eigenvalue() <= 0:
        raise GraphError("Im Z must be positive definite")
    state = graph.to_covariance()
    cov = state.cov.copy()
    s = np.eye(cov.shape[0])
    rot = rotation_matrix(-angle)
    for m in modes:
        s[2 * m:2 * m + 2, 2 * m:2 * m + 2] = rot
    cov = s @ cov @ s.T
    vxx = cov[0::2, 0::2]
    cond = np.linalg.cond(vxx)
    if cond > COND_LIMIT:
        raise GraphError(f"phase shift leads to a singular x-block (cond={cond:.3g})")
    vinv = np.linalg.inv(vxx)
    z = cov[1::2, 0::2] @ vinv + 1j * VACUUM_VAR * vinv
    return ComplexGraph(0.5 * (z + z.T))


def modes_of_bins(bins: Iterable[int]) -> list[int]:
    """Both rails of each listed temporal index."""
    return [2 * k + r for k in bins for r in (0, 1)]


@dataclass(frozen=True)
class NullifierCheck:
    residual: float
    approx_x: np.ndarray  # <(x - G x)^2> per node
    approx_p: np.ndarray  # <(p + G p)^2> per node


def check_nullifiers(graph: ComplexGraph, state: CovarianceState, g: np.ndarray | None = None) -> NullifierCheck:
    """Residual of the exact nullifier second moments plus approximate-nullifier variances.

    For ``n = p - Z x`` and ``m = x - Z^-1 p`` the pure state gives ``<n^dag n> = 0``
    and ``<m^dag m> = 0``.  The residual is the largest absolute entry of these
    matrices (symmetrised-product covariances, with the commutator part restored).
    ``g`` defaults to the open-chain ideal graph of matching size.
    """
    n = graph.n_modes
    if state.n_modes != n:
        raise ValueError(f"graph has {n} modes, state has {state.n_modes}")
    z = graph.Z
    zinv = np.linalg.inv(z)
    cov = state.cov
    # Full second moments <r_a r_b> = V_ab + (i/4) Omega_ab for zero mean.
    sec = cov + 0.25j * np.kron(np.eye(n), np.array([[0, 1], [-1, 0]]))
    # nullifier rows over interleaved quadratures
    rows_n = np.zeros((n, 2 * n), dtype=complex)
    rows_n[:, 1::2] = np.eye(n)
    rows_n[:, 0::2] = -z
    rows_m = np.zeros((n, 2 * n), dtype=complex)
    rows_m[:, 0::2] = np.eye(n)
    rows_m[:, 1::2] = -zinv
    # <n_b^dag n_a> = sum conj(rows[b,j]) rows[a,i] <r_j r_i>
    res_n = rows_n.conj() @ sec @ rows_n.T
    res_m = rows_m.conj() @ sec @ rows_m.T
    residual = float(max(np.abs(res_n).max(), np.abs(res_m).max()))

    if g is None:
        g = build_G(n // 2)
    ax = np.zeros((n, 2 * n))
    ax[:, 0::2] = np.eye(n) - g
    ap = np.zeros((n, 2 * n))
    ap[:, 1::2] = np.eye(n) + g
    approx_x = np.einsum("ai,ij,aj->a", ax, cov, ax)
    approx_p = np.einsum("ai,ij,aj->a", ap, cov, ap)
    return NullifierCheck(residual, approx_x, approx_p)
