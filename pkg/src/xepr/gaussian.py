"""Gaussian-state core: quadrature conventions, symplectic maps and channels.

Conventions used throughout the package:

* hbar = 1/2, so ``[x, p] = i/2`` and every vacuum quadrature has variance 1/4.
* Quadrature vectors are interleaved, ``(x_0, p_0, x_1, p_1, ...)``.
* Modes of the dual-rail register are ordered time-major, rail-minor:
  ``(A, 0), (B, 0), (A, 1), (B, 1), ...``.  See :class:`ModeIndex`.
* A :class:`SymplecticOp` acts on first and second moments as
  ``mean -> S mean + d`` and ``cov -> S cov S^T``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

VACUUM_VAR = 0.25
SYMPLECTIC_TOL = 1e-12


class Rail(enum.IntEnum):
    A = 0
    B = 1


@dataclass(frozen=True, order=True)
class ModeIndex:
    """Position of a wave-packet in the register: temporal index ``k`` (0-based), then rail."""

    k: int
    rail: Rail

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"temporal index must be non-negative, got {self.k}")
        object.__setattr__(self, "rail", Rail(self.rail))

    def flat(self) -> int:
        return 2 * self.k + int(self.rail)

    @classmethod
    def from_flat(cls, i: int) -> "ModeIndex":
        return cls(i // 2, Rail(i % 2))


def _mode(m) -> int:
    return m.flat() if isinstance(m, ModeIndex) else int(m)


def omega(n_modes: int) -> np.ndarray:
    """Symplectic form for interleaved ordering."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class CovarianceState:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
            raise ValueError(f"covariance must be 2N x 2N, got {cov.shape}")
        if mean.shape != (cov.shape[0],):
            raise ValueError(f"mean length {mean.shape} does not match covariance {cov.shape}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.cov.shape[0] // 2

    @classmethod
    def vacuum(cls, n_modes: int) -> "CovarianceState":
        return cls(np.zeros(2 * n_modes), VACUUM_VAR * np.eye(2 * n_modes))

    def reduced(self, modes: Sequence) -> "CovarianceState":
        idx = quadrature_indices(modes)
        return CovarianceState(self.mean[idx], self.cov[np.ix_(idx, idx)])

    def min_uncertainty_eigenvalue(self) -> float:
        """Smallest eigenvalue of ``cov + (i/4) Omega``; >= 0 for a physical state."""
        h = self.cov + 0.25j * omega(self.n_modes)
        return float(np.linalg.eigvalsh(h).min())

    def symplectic_eigenvalues(self) -> np.ndarray:
        """Williamson eigenvalues scaled so the vacuum gives 1."""
        ev = np.linalg.eigvals(4.0 * 1j * omega(self.n_modes) @ self.cov)
        return np.sort(np.abs(ev.real))[::2]

    def is_pure(self, tol: float = 1e-9) -> bool:
        return bool(np.all(np.abs(self.symplectic_eigenvalues() - 1.0) < tol))


def quadrature_indices(modes: Sequence) -> np.ndarray:
    return np.array([2 * _mode(m) + q for m in modes for q in (0, 1)], dtype=int)


@dataclass(frozen=True)
class SymplecticOp:
    matrix: np.ndarray
    displacement: np.ndarray | None = None

    def __post_init__(self):
        s = np.asarray(self.matrix, dtype=float)
        d = np.zeros(s.shape[0]) if self.displacement is None else np.asarray(self.displacement, float)
        object.__setattr__(self, "matrix", s)
        object.__setattr__(self, "displacement", d)

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def symplectic_error(self) -> float:
        om = omega(self.n_modes)
        return float(np.abs(self.matrix @ om @ self.matrix.T - om).max())

    def __matmul__(self, other: "SymplecticOp") -> "SymplecticOp":
        """Composition: ``(self @ other)`` applies ``other`` first."""
        return SymplecticOp(self.matrix @ other.matrix, self.matrix @ other.displacement + self.displacement)


def embed(local: np.ndarray, modes: Sequence, n_modes: int) -> np.ndarray:
    """Lift a 2m x 2m matrix acting on ``modes`` into the full 2N x 2N register."""
    idx = quadrature_indices(modes)
    full = np.eye(2 * n_modes)
    full[np.ix_(idx, idx)] = local
    return full


def rotation_matrix(theta: float) -> np.ndarray:
    """Moment map of R(theta) = exp(i theta (x^2 + p^2)): x -> x cos - p sin, p -> x sin + p cos."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def squeeze_matrix(r: float) -> np.ndarray:
    """Moment map of S(r) = exp(i r (xp + px)): x -> e^-r x, p -> e^r p."""
    return np.diag([np.exp(-r), np.exp(r)])


def make_squeezer(r: float, which: str = "x", mode=0, n_modes: int = 1) -> SymplecticOp:
    """Single-mode squeezer. ``which="x"`` squeezes x (rail A), ``"p"`` squeezes p (rail B)."""
    if not np.isfinite(r):
        raise ValueError("squeezing parameter must be finite")
    if which in ("x", "x-squeezed"):
        local = squeeze_matrix(r)
    elif which in ("p", "p-squeezed"):
        local = squeeze_matrix(-r)
    else:
        raise ValueError(f"unknown squeezing quadrature {which!r}")
    return SymplecticOp(embed(local, [mode], n_modes))


def make_rotation(theta: float, mode=0, n_modes: int = 1) -> SymplecticOp:
    return SymplecticOp(embed(rotation_matrix(theta), [mode], n_modes))


def make_beamsplitter(i, j, n_modes: int) -> SymplecticOp:
    """Balanced beam-splitter B_{i,j}: mode i -> (i + j)/sqrt2, mode j -> (-i + j)/sqrt2.

    Acts identically on x and p (passive, real).
    """
    a, b = _mode(i), _mode(j)
    if a == b:
        raise ValueError("beam-splitter needs two distinct modes")
    for m in (a, b):
        if not 0 <= m < n_modes:
            raise IndexError(f"mode {m} out of range for {n_modes} modes")
    h = 1.0 / np.sqrt(2.0)
    local = np.kron(np.array([[h, h], [-h, h]]), np.eye(2))
    return SymplecticOp(embed(local, [a, b], n_modes))


def make_permutation(perm: Sequence[int]) -> SymplecticOp:
    """Mode relabelling: output mode ``perm[m]`` receives input mode ``m``."""
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise ValueError("not a permutation")
    s = np.zeros((2 * n, 2 * n))
    for src, dst in enumerate(perm):
        s[2 * dst, 2 * src] = 1.0
        s[2 * dst + 1, 2 * src + 1] = 1.0
    return SymplecticOp(s)


def apply_op(state: CovarianceState, op: SymplecticOp) -> CovarianceState:
    if op.matrix.shape != state.cov.shape:
        raise ValueError(f"operator acts on {op.n_modes} modes, state has {state.n_modes}")
    s = op.matrix
    return CovarianceState(s @ state.mean + op.displacement, s @ state.cov @ s.T)


def apply_channel(state: CovarianceState, x: np.ndarray, y: np.ndarray) -> CovarianceState:
    """General Gaussian channel ``mean -> X mean``, ``cov -> X cov X^T + Y``."""
    if x.shape != state.cov.shape or y.shape != state.cov.shape:
        raise ValueError("channel matrices do not match the state dimension")
    return CovarianceState(x @ state.mean, x @ state.cov @ x.T + y)


def apply_loss(state: CovarianceState, mode, eta2: float) -> CovarianceState:
    """Pure-loss channel of transmissivity ``eta2`` on one mode (beam-splitter with vacuum)."""
    if not 0.0 <= eta2 <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {eta2}")
    n = state.n_modes
    idx = quadrature_indices([mode])
    if idx.max() >= 2 * n:
        raise IndexError(f"mode {mode} out of range for {n} modes")
    x = np.eye(2 * n)
    y = np.zeros((2 * n, 2 * n))
    x[idx, idx] = np.sqrt(eta2)
    y[idx, idx] = (1.0 - eta2) * VACUUM_VAR
    return apply_channel(state, x, y)


def squeezed_input(sq_var: float, asq_var: float, which: str) -> np.ndarray:
    """2x2 covariance of a (possibly mixed) squeezed input, variances relative to vacuum."""
    v = VACUUM_VAR * np.array([sq_var, asq_var])
    if which == "p":
        v = v[::-1]
    return np.diag(v)


@dataclass(frozen=True)
class LossSpec:
    """Effective efficiencies (intensity) per beam and channel.

    ``eta2_A``/``eta2_B``: OPO-A/OPO-B light through the free-space path;
    ``eta2_AF``/``eta2_BF``: through the fiber delay path.
    """

    eta2_A: float = 1.0
    eta2_B: float = 1.0
    eta2_AF: float = 1.0
    eta2_BF: float = 1.0

    def __post_init__(self):
        for name in ("eta2_A", "eta2_B", "eta2_AF", "eta2_BF"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @classmethod
    def nominal(cls) -> "LossSpec":
        return cls(eta2_A=0.882, eta2_B=0.899, eta2_AF=0.737, eta2_BF=0.753)

    def first_splitter(self) -> tuple[np.ndarray, np.ndarray]:
        """Lossy first beam-splitter as a 2x2 contraction plus its vacuum complement.

        Rows are (free-space path, fiber path), columns (OPO-A, OPO-B).  The same
        matrix acts on x and p.  Returns ``(M, noise)`` with ``noise = (I - M M^T)/4``
        per quadrature.  With all efficiencies 1 this is exactly B_{A,B}.
        """
        ea, eb, eaf, ebf = np.sqrt([self.eta2_A, self.eta2_B, self.eta2_AF, self.eta2_BF])
        m = np.array([[ea, eb], [-eaf, ebf]]) / np.sqrt(2.0)
        noise = VACUUM_VAR * (np.eye(2) - m @ m.T)
        if np.linalg.eigvalsh(noise).min() < -1e-12:
            raise ValueError("efficiencies are not realisable as a passive lossy splitter")
        return m, noise


def fiber_arrival_state(
    nbins: int,
    cov_A: np.ndarray,
    cov_B: np.ndarray,
    losses: LossSpec | None = None,
    boundary: str = "open",
    fiber_phase: float | Sequence[float] = 0.0,
) -> CovarianceState:
    """Register state just before the second beam-splitters (after delay and losses).

    Mode (A, k) holds the free-space path of bin k; mode (B, k) holds the fiber
    path of bin k-1, rotated by ``fiber_phase[k]``.
    """
    if nbins < 2:
        raise ValueError("need at least two time bins")
    if boundary not in ("open", "ring"):
        raise ValueError(f"unknown boundary {boundary!r}")
    losses = losses or LossSpec()
    m, noise = losses.first_splitter()
    phases = np.broadcast_to(np.asarray(fiber_phase, dtype=float), (nbins,))

    # Source bins: the open boundary adds bin -1, stored last.
    nsrc = nbins + (1 if boundary == "open" else 0)
    cov_in = np.zeros((4 * nsrc, 4 * nsrc))
    for b in range(nsrc):
        cov_in[4 * b:4 * b + 2, 4 * b:4 * b + 2] = cov_A
        cov_in[4 * b + 2:4 * b + 4, 4 * b + 2:4 * b + 4] = cov_B

    n_out = 2 * nbins
    x = np.zeros((2 * n_out, 4 * nsrc))
    y = np.zeros((2 * n_out, 2 * n_out))
    m4 = np.kron(m, np.eye(2))
    n4 = np.kron(noise, np.eye(2))

    for k in range(nbins):
        if k > 0:
            prev = k - 1
        else:
            prev = nbins if boundary == "open" else nbins - 1
        rot = rotation_matrix(phases[k])
        a_out = slice(4 * k, 4 * k + 2)
        b_out = slice(4 * k + 2, 4 * k + 4)
        x[a_out, 4 * k:4 * k + 4] = m4[0:2]
        x[b_out, 4 * prev:4 * prev + 4] = rot @ m4[2:4]
        y[a_out, a_out] = n4[0:2, 0:2]
        y[b_out, b_out] = rot @ n4[2:4, 2:4] @ rot.T
    # Loss noise of the free-space path of bin k and its fiber partner (arriving at
    # k+1) is correlated.  Partners outside the window (open boundary) are dropped.
    for k in range(nbins):
        nxt = k + 1
        if nxt == nbins:
            if boundary == "open":
                continue
            nxt = 0
        rot = rotation_matrix(phases[nxt])
        a_out = slice(4 * k, 4 * k + 2)
        b_out = slice(4 * nxt + 2, 4 * nxt + 4)
        y[a_out, b_out] = n4[0:2, 2:4] @ rot.T
        y[b_out, a_out] = rot @ n4[2:4, 0:2]

    return CovarianceState(np.zeros(2 * n_out), x @ cov_in @ x.T + y)


def second_splitters(nbins: int) -> SymplecticOp:
    """All second beam-splitters B_{(B,k),(A,k)} as one operator."""
    n = 2 * nbins
    op = SymplecticOp(np.eye(2 * n))
    for k in range(nbins):
        op = make_beamsplitter(ModeIndex(k, Rail.B), ModeIndex(k, Rail.A), n) @ op
    return op


def extended_epr_state(
    nbins: int,
    cov_A: np.ndarray,
    cov_B: np.ndarray,
    losses: LossSpec | None = None,
    boundary: str = "open",
    fiber_phase: float | Sequence[float] = 0.0,
) -> CovarianceState:
    """Covariance of the dual-rail register after steps (i)-(iv).

    ``cov_A``/``cov_B`` are the 2x2 input covariances of one bin of each OPO.
    ``fiber_phase`` rotates each delayed fiber-path mode just before the second
    beam-splitter (scalar or one value per bin).

    ``boundary="open"``: the fiber slot of bin 0 receives the fiber half of an
    extra input pair whose free-space half is discarded; the fiber output of the
    last bin leaves the window.  ``boundary="ring"``: the last bin's fiber output
    feeds bin 0, which keeps the register pure for pure lossless inputs.
    """
    pre = fiber_arrival_state(nbins, cov_A, cov_B, losses, boundary, fiber_phase)
    return apply_op(pre, second_splitters(nbins))


def dense_circuit(
    nbins: int,
    r_A: float,
    r_B: float,
    losses: LossSpec | None = None,
    boundary: str = "open",
) -> CovarianceState:
    """Extended EPR state from pure squeezed inputs (x-squeezed on A, p-squeezed on B)."""
    cov_A = squeezed_input(np.exp(-2 * r_A), np.exp(2 * r_A), "x")
    cov_B = squeezed_input(np.exp(-2 * r_B), np.exp(2 * r_B), "p")
    return extended_epr_state(nbins, cov_A, cov_B, losses, boundary)


def nullifier_vectors(nbins: int) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient rows for X_k and P_k (k = 0 .. nbins-2) on the interleaved register.

    X_k = x^A_k + x^B_k + x^A_{k+1} - x^B_{k+1}
    P_k = p^A_k + p^B_k - p^A_{k+1} + p^B_{k+1}
    """
    n = nbins - 1
    cx = np.zeros((n, 4 * nbins))
    cp = np.zeros((n, 4 * nbins))
    for k in range(n):
        a0, b0, a1, b1 = (4 * k, 4 * k + 2, 4 * k + 4, 4 * k + 6)
        cx[k, [a0, b0, a1, b1]] = [1, 1, 1, -1]
        cp[k, [a0 + 1, b0 + 1, a1 + 1, b1 + 1]] = [1, 1, -1, 1]
    return cx, cp


def nullifier_variances(state: CovarianceState) -> tuple[np.ndarray, np.ndarray]:
    cx, cp = nullifier_vectors(state.n_modes // 2)
    vx = np.einsum("ki,ij,kj->k", cx, state.cov, cx)
    vp = np.einsum("ki,ij,kj->k", cp, state.cov, cp)
    return vx, vp
