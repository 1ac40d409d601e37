"""Teleportation-based single-mode Gaussian gates on the extended EPR resource.

Operator conventions as moment maps on (x, p):

* ``R(theta) = exp(i theta (x^2 + p^2))``  ->  ``[[cos, -sin], [sin, cos]]``
* ``S(r) = exp(i r (xp + px))``            ->  ``diag(e^-r, e^r)``
* ``X(s)`` shifts x by s, ``Z(s)`` shifts p by s.

A homodyne measurement at angle ``theta`` reads ``x cos(theta) + p sin(theta)``.
The teleportation circuit acts on three modes ``(in, A, B)``: A is x-squeezed,
B is p-squeezed, ``B_{A,B}`` makes the EPR pair and ``B_{in,A}`` couples the
input.  Modes ``in`` and ``A`` are measured at ``theta1`` and ``theta2`` and the
outcome-dependent displacement is applied to ``B``.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .gaussian import (
    VACUUM_VAR,
    CovarianceState,
    make_beamsplitter,
    rotation_matrix,
    squeeze_matrix,
)

SINGULAR_TOL = 1e-9


class SingularGateError(ValueError):
    pass


@dataclass(frozen=True)
class GateAngles:
    theta1: float
    theta2: float

    @property
    def plus(self) -> float:
        return self.theta1 + self.theta2

    @property
    def minus(self) -> float:
        return self.theta1 - self.theta2

    def check(self):
        if abs(np.sin(self.minus)) < SINGULAR_TOL:
            raise SingularGateError(f"theta1 - theta2 = {self.minus} is a multiple of pi")

    @classmethod
    def identity(cls) -> "GateAngles":
        return cls(np.pi / 2, 0.0)

    @classmethod
    def fourier(cls) -> "GateAngles":
        return cls(np.pi / 4, -np.pi / 4)


@dataclass(frozen=True)
class GaussianGate:
    matrix: np.ndarray
    displacement: np.ndarray = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (2, 2):
            raise ValueError("single-mode gate needs a 2x2 matrix")
        d = np.zeros(2) if self.displacement is None else np.asarray(self.displacement, float)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "displacement", d)

    def apply(self, state: CovarianceState) -> CovarianceState:
        s = self.matrix
        return CovarianceState(s @ state.mean + self.displacement, s @ state.cov @ s.T)

    def __matmul__(self, other: "GaussianGate") -> "GaussianGate":
        return GaussianGate(self.matrix @ other.matrix, self.matrix @ other.displacement + self.displacement)


def gate_from_angles(angles: GateAngles) -> GaussianGate:
    """``R(-theta+/2 + pi/2) S(log tan(theta-/2)) R(-theta+/2)``.

    For ``tan(theta-/2) < 0`` the log is taken of the magnitude and a rotation by
    pi is absorbed (``S`` of a negative scale equals ``-S`` of its magnitude).
    """
    angles.check()
    t = np.tan(angles.minus / 2.0)
    sign = np.sign(t)
    s = sign * squeeze_matrix(np.log(abs(t)))
    m = rotation_matrix(-angles.plus / 2 + np.pi / 2) @ s @ rotation_matrix(-angles.plus / 2)
    return GaussianGate(m)


def feedforward_matrix(angles: GateAngles) -> np.ndarray:
    """Linear map from outcomes (t1, t2) to the (x, p) displacement."""
    angles.check()
    s1, s2 = np.sin(angles.theta1), np.sin(angles.theta2)
    c1, c2 = np.cos(angles.theta1), np.cos(angles.theta2)
    k = np.sqrt(2.0) / np.sin(angles.minus)
    return k * np.array([[s2, -s1], [c2, -c1]])


def feedforward(t1: float, t2: float, angles: GateAngles) -> np.ndarray:
    """Displacement ``(X shift, Z shift)`` for homodyne outcomes ``t1, t2``."""
    return feedforward_matrix(angles) @ np.array([t1, t2], dtype=float)


def _resource(input_state: CovarianceState, r: float):
    if input_state.n_modes != 1:
        raise ValueError("teleportation acts on a single-mode input")
    if not np.isfinite(r) or r < 0:
        raise ValueError("squeezing must be finite and non-negative")
    cov = np.zeros((6, 6))
    cov[:2, :2] = input_state.cov
    cov[2:4, 2:4] = VACUUM_VAR * np.diag([np.exp(-2 * r), np.exp(2 * r)])
    cov[4:6, 4:6] = VACUUM_VAR * np.diag([np.exp(2 * r), np.exp(-2 * r)])
    mean = np.concatenate([input_state.mean, np.zeros(4)])
    s = (make_beamsplitter(0, 1, 3) @ make_beamsplitter(1, 2, 3)).matrix
    return s, mean, cov


def _meas_rows(angles: GateAngles) -> np.ndarray:
    c = np.zeros((2, 6))
    c[0, 0:2] = np.cos(angles.theta1), np.sin(angles.theta1)
    c[1, 2:4] = np.cos(angles.theta2), np.sin(angles.theta2)
    return c


def teleport_channel(r: float, angles: GateAngles, input_state: CovarianceState | None = None):
    """Outcome-averaged teleportation as a channel ``(X, Y)``: ``V -> X V X^T + Y``.

    ``X`` equals the intended gate exactly; ``Y`` is the added noise from the
    finitely squeezed resource and scales as ``e^{-2r}``.
    """
    inp = input_state or CovarianceState.vacuum(1)
    s, _, cov = _resource(inp, r)
    f = feedforward_matrix(angles)
    t = s[4:6] + f @ _meas_rows(angles) @ s
    anc = cov.copy()
    anc[:2, :2] = 0.0
    return t[:, :2], t[:, 2:] @ anc[2:, 2:] @ t[:, 2:].T


def simulate_teleport_step(
    input_state: CovarianceState, r: float, angles: GateAngles, seed=None
) -> CovarianceState:
    """One measure-and-feedforward step; returns the conditional output state.

    The two homodyne outcomes are sampled, the output mode is conditioned on them
    exactly (Schur complement) and the feedforward displacement is applied.  The
    output covariance does not depend on the outcomes.
    """
    angles.check()
    s, mean, cov = _resource(input_state, r)
    rng = np.random.default_rng(seed)
    mu = s @ mean
    v = s @ cov @ s.T
    c = _meas_rows(angles)
    sig = c @ v @ c.T
    cross = v[4:6] @ c.T
    gain = np.linalg.solve(sig, cross.T).T
    t = rng.multivariate_normal(c @ mu, sig)
    out_mean = mu[4:6] + gain @ (t - c @ mu) + feedforward(t[0], t[1], angles)
    out_cov = v[4:6, 4:6] - gain @ cross.T
    return CovarianceState(out_mean, 0.5 * (out_cov + out_cov.T))


def excess_noise(r: float, angles: GateAngles, input_state: CovarianceState | None = None) -> float:
    """Trace of the added noise of the outcome-averaged channel."""
    _, y = teleport_channel(r, angles, input_state)
    return float(np.trace(y))


def sequential_mbqc(
    input_state: CovarianceState, r: float, program: Sequence[GateAngles], seed=None
) -> CovarianceState:
    """Chain teleportation steps, one fresh resource slot per gate."""
    if len(program) < 1:
        raise ValueError("gate program is empty")
    ss = np.random.SeedSequence(seed)
    state = input_state
    for angles, child in zip(program, ss.spawn(len(program))):
        state = simulate_teleport_step(state, r, angles, child)
    return state


def compose(program: Sequence[GateAngles]) -> GaussianGate:
    """Intended composite gate (later steps act last)."""
    gate = GaussianGate(np.eye(2))
    for angles in program:
        gate = gate_from_angles(angles) @ gate
    return gate
