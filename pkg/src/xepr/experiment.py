"""Streaming Monte-Carlo model of the time-multiplexed dual-rail experiment.

Every measured quadrature lives on its own mode and commutes with the others, so
the joint homodyne distribution is the classical push-forward of the Gaussian
input quadratures through the circuit.  The sampler draws both quadratures of
both squeezed inputs per bin, applies the lossy first splitter, delays the fiber
path by one slot, mixes at the second splitter and reads out one quadrature per
detector.  Frames are processed in fixed-size chunks so memory does not grow with
``bins_per_frame``.
"""

from __future__ import annotations

import hashlib
import json
import subprocess
from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import optimize

from . import __version__
from .gaussian import VACUUM_VAR, LossSpec, fiber_arrival_state, squeezed_input
from .spectral import db, from_db, loss_budget

CHUNK = 65536
BASES = ("x", "p")
SQRT_HALF = np.sqrt(0.5)


@dataclass(frozen=True)
class ExperimentConfig:
    """Run parameters.  Squeezing levels are in dB relative to shot noise (<= 0).

    ``antisqueezing_db_*`` default to the pure-state value ``-squeezing_db``.
    ``basis_schedule`` is ``"alternate"`` (x on even frames, p on odd), ``"x"``,
    ``"p"``, or a list of ``[basis_A, basis_B]`` pairs cycled over frames.
    ``phase_drift_rate`` is the Wiener increment scale in rad per sqrt(bin),
    applied independently to the fiber path and both local oscillators.
    """

    squeezing_db_A: float = -6.0
    squeezing_db_B: float = -6.0
    antisqueezing_db_A: float | None = None
    antisqueezing_db_B: float | None = None
    eta2_A: float = 1.0
    eta2_B: float = 1.0
    eta2_AF: float = 1.0
    eta2_BF: float = 1.0
    frames: int = 100
    bins_per_frame: int = 200
    basis_schedule: str | tuple = "alternate"
    phase_drift_rate: float = 0.0
    electronic_noise_ratio: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.frames < 1 or self.bins_per_frame < 1:
            raise ValueError("frames and bins_per_frame must be >= 1")
        for name in ("squeezing_db_A", "squeezing_db_B"):
            if getattr(self, name) > 0:
                raise ValueError(f"{name} must be <= 0 dB (below shot noise)")
        for rail in "AB":
            asq = getattr(self, f"antisqueezing_db_{rail}")
            if asq is not None and asq < -getattr(self, f"squeezing_db_{rail}") - 1e-12:
                raise ValueError(f"antisqueezing_db_{rail} below the pure-state value violates uncertainty")
        self.losses()  # validates efficiencies
        if self.phase_drift_rate < 0 or self.electronic_noise_ratio < 0:
            raise ValueError("drift rate and electronic noise ratio must be non-negative")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        sched = self.basis_schedule
        if isinstance(sched, str):
            if sched not in ("alternate", "x", "p"):
                raise ValueError(f"unknown basis schedule {sched!r}")
        else:
            pairs = tuple(tuple(p) for p in sched)
            if not pairs or any(len(p) != 2 or set(p) - set(BASES) for p in pairs):
                raise ValueError("basis schedule must be a non-empty list of [basis_A, basis_B] pairs")
            object.__setattr__(self, "basis_schedule", pairs)

    def losses(self) -> LossSpec:
        return LossSpec(self.eta2_A, self.eta2_B, self.eta2_AF, self.eta2_BF)

    def input_variances(self, rail: str) -> tuple[float, float]:
        """(squeezed, antisqueezed) variance relative to vacuum for rail A or B."""
        sq_db = getattr(self, f"squeezing_db_{rail}")
        asq_db = getattr(self, f"antisqueezing_db_{rail}")
        sq = float(from_db(sq_db))
        asq = 1.0 / sq if asq_db is None else float(from_db(asq_db))
        return sq, asq

    def bases(self, frame: int) -> tuple[str, str]:
        sched = self.basis_schedule
        if sched == "alternate":
            b = BASES[frame % 2]
            return b, b
        if isinstance(sched, str):
            return sched, sched
        return sched[frame % len(sched)]

    def to_dict(self) -> dict:
        d = asdict(self)
        if not isinstance(self.basis_schedule, str):
            d["basis_schedule"] = [list(p) for p in self.basis_schedule]
        return d

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


@dataclass(frozen=True)
class BinSample:
    frame: int
    k: int  # 1-based temporal index
    basis_A: str
    value_A: float
    basis_B: str
    value_B: float


@dataclass
class PhaseState:
    """Phase offsets of the fiber path and the two local oscillators (radians)."""

    fiber: float = 0.0
    lo_A: float = 0.0
    lo_B: float = 0.0

    def reset(self):
        self.fiber = self.lo_A = self.lo_B = 0.0


def apply_phase_drift(phase: PhaseState | float, quad, path: str = "fiber"):
    """Rotate a quadrature pair ``(x, p)`` by the phase of ``path``.

    ``x -> x cos(phi) - p sin(phi)``, ``p -> x sin(phi) + p cos(phi)``.  Works
    element-wise on arrays.  ``phase`` may be a PhaseState or a bare angle.
    """
    phi = getattr(phase, path) if isinstance(phase, PhaseState) else phase
    x, p = quad
    c, s = np.cos(phi), np.sin(phi)
    return x * c - p * s, x * s + p * c


@dataclass
class FrameSamples:
    """Outcomes of one frame as arrays; iterates as BinSample records."""

    frame: int
    basis_A: str
    basis_B: str
    value_A: np.ndarray
    value_B: np.ndarray

    def __len__(self) -> int:
        return len(self.value_A)

    def __getitem__(self, i: int) -> BinSample:
        if not -len(self) <= i < len(self):
            raise IndexError(i)
        i %= len(self)
        return BinSample(self.frame, i + 1, self.basis_A, float(self.value_A[i]), self.basis_B, float(self.value_B[i]))

    def __iter__(self) -> Iterator[BinSample]:
        return (self[i] for i in range(len(self)))


@dataclass
class _Sampler:
    cfg: ExperimentConfig
    m: np.ndarray = field(init=False)
    noise_root: np.ndarray = field(init=False)
    std_A: np.ndarray = field(init=False)
    std_B: np.ndarray = field(init=False)

    def __post_init__(self):
        self.m, noise = self.cfg.losses().first_splitter()
        w, v = np.linalg.eigh(noise)
        self.noise_root = v * np.sqrt(np.clip(w, 0.0, None))
        sq, asq = self.cfg.input_variances("A")
        self.std_A = np.sqrt(VACUUM_VAR * np.array([sq, asq]))  # x-squeezed
        sq, asq = self.cfg.input_variances("B")
        self.std_B = np.sqrt(VACUUM_VAR * np.array([asq, sq]))  # p-squeezed

    def source(self, rng, n):
        """Lossy first-splitter outputs for ``n`` source bins, shape (n, 2) each (x, p)."""
        a = rng.standard_normal((n, 2)) * self.std_A
        b = rng.standard_normal((n, 2)) * self.std_B
        e = rng.standard_normal((n, 2, 2)) @ self.noise_root.T  # (bin, quadrature, path)
        free = self.m[0, 0] * a + self.m[0, 1] * b + e[:, :, 0]
        fiber = self.m[1, 0] * a + self.m[1, 1] * b + e[:, :, 1]
        return free, fiber

    def frame(self, frame: int) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Yield chunks of output quadratures ``(A_out, B_out, phases)`` for one frame.

        ``A_out``/``B_out`` have shape (c, 2) holding (x, p) after the local
        oscillator rotation; ``phases`` has shape (c, 3): fiber, LO-A, LO-B.
        """
        cfg = self.cfg
        rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed), int(frame)]))
        n = cfg.bins_per_frame
        # One preliminary source bin fills the delay line before k = 1.
        _, buffer = self.source(rng, 1)
        phase = np.zeros(3)
        sigma = cfg.phase_drift_rate
        done = 0
        while done < n:
            c = min(CHUNK, n - done)
            free, fiber = self.source(rng, c)
            delayed = np.concatenate([buffer, fiber[:-1]])
            buffer = fiber[-1:]
            steps = rng.standard_normal((c, 3)) * sigma
            if done == 0:
                steps[0] = 0.0  # re-lock: phases start at 0 on the first bin
            phases = phase + np.cumsum(steps, axis=0)
            phase = phases[-1]
            bx, bp = apply_phase_drift(phases[:, 0], (delayed[:, 0], delayed[:, 1]))
            # second splitter B_{B_k, A_k}
            ax_, ap_ = free[:, 0], free[:, 1]
            out_B = ((bx + ax_) * SQRT_HALF, (bp + ap_) * SQRT_HALF)
            out_A = ((ax_ - bx) * SQRT_HALF, (ap_ - bp) * SQRT_HALF)
            out_A = np.stack(apply_phase_drift(phases[:, 1], out_A), axis=1)
            out_B = np.stack(apply_phase_drift(phases[:, 2], out_B), axis=1)
            if cfg.electronic_noise_ratio > 0:
                el = rng.standard_normal((c, 2, 2)) * np.sqrt(cfg.electronic_noise_ratio * VACUUM_VAR)
                out_A = out_A + el[:, 0]
                out_B = out_B + el[:, 1]
            yield out_A, out_B, phases
            done += c


def sample_frame(cfg: ExperimentConfig, frame: int) -> FrameSamples:
    """Homodyne outcomes of one frame in the scheduled bases."""
    if not 0 <= frame < cfg.frames:
        raise ValueError(f"frame {frame} outside [0, {cfg.frames})")
    ba, bb = cfg.bases(frame)
    ia, ib = BASES.index(ba), BASES.index(bb)
    va, vb = [], []
    for out_A, out_B, _ in _Sampler(cfg).frame(frame):
        va.append(out_A[:, ia])
        vb.append(out_B[:, ib])
    return FrameSamples(frame, ba, bb, np.concatenate(va), np.concatenate(vb))


def sample_frame_full(cfg: ExperimentConfig, frame: int) -> np.ndarray:
    """Both quadratures of every output mode, interleaved ``(xA_k, pA_k, xB_k, pB_k)``.

    Not physically measurable at once; used to compare full covariances with the
    dense oracle.  Same random stream as :func:`sample_frame`.
    """
    rows = [np.concatenate([a, b], axis=1) for a, b, _ in _Sampler(cfg).frame(frame)]
    return np.concatenate(rows).reshape(-1)


def git_provenance(path: Path | None = None) -> str:
    """``git describe`` of the source tree, or ``"unknown"`` outside a checkout."""
    path = path or Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"], cwd=path, capture_output=True, text=True, timeout=5
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else "unknown"


@dataclass(frozen=True)
class RunMetadata:
    config: dict
    config_hash: str
    seed: int
    version: str
    provenance: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def run_metadata(cfg: ExperimentConfig) -> RunMetadata:
    return RunMetadata(cfg.to_dict(), cfg.config_hash(), int(cfg.seed), __version__, git_provenance())


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> tuple[Iterator[FrameSamples], RunMetadata]:
    """Lazy stream of frames in frame order plus run metadata.

    With ``threads > 1`` frames are computed concurrently (numpy releases the
    GIL); output order and values do not depend on the thread count.
    """
    meta = run_metadata(cfg)
    frames = range(cfg.frames)

    def gen():
        if threads <= 1:
            for f in frames:
                yield sample_frame(cfg, f)
            return
        with ThreadPoolExecutor(max_workers=threads) as pool:
            # bounded look-ahead keeps memory flat
            window = 4 * threads
            for start in range(0, cfg.frames, window):
                yield from pool.map(lambda f: sample_frame(cfg, f), frames[start:start + window])

    return gen(), meta


def write_samples_csv(frames, path, metadata: RunMetadata | None = None) -> Path:
    """Write BinSample rows (frame,k,basis_A,value_A,basis_B,value_B) and optional JSON sidecar."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write("frame,k,basis_A,value_A,basis_B,value_B\n")
        for fr in frames:
            k = np.arange(1, len(fr) + 1)
            prefix = f"{fr.frame},"
            lines = [
                f"{prefix}{kk},{fr.basis_A},{a!r},{fr.basis_B},{b!r}\n"
                for kk, a, b in zip(k.tolist(), fr.value_A.tolist(), fr.value_B.tolist())
            ]
            fh.writelines(lines)
    if metadata is not None:
        sidecar(path).write_text(metadata.to_json() + "\n")
    return path


def sidecar(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


# --- expected variances under phase drift -------------------------------------------------


def _drift_free_pre(cfg: ExperimentConfig) -> np.ndarray:
    sq, asq = cfg.input_variances("A")
    cov_A = squeezed_input(sq, asq, "x")
    sq, asq = cfg.input_variances("B")
    cov_B = squeezed_input(sq, asq, "p")
    return fiber_arrival_state(2, cov_A, cov_B, cfg.losses()).cov


def _batched_rot(phi: np.ndarray) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    out = np.empty(phi.shape + (2, 2))
    out[..., 0, 0], out[..., 0, 1], out[..., 1, 0], out[..., 1, 1] = c, -s, s, c
    return out


def expected_nullifier_variances(cfg: ExperimentConfig, phase_var, order: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Mean (X, P) nullifier variance when all three phases have variance ``phase_var``.

    Averages the exact Gaussian nullifier variance over independent normal
    phases (fiber, LO-A, LO-B) by Gauss-Hermite quadrature.  The phases of
    neighbouring bins are taken equal, which is accurate once the variance is
    much larger than one drift step.  Electronic noise adds ``ratio``.
    """
    pre = _drift_free_pre(cfg)
    nodes, weights = hermegauss(order)
    weights = weights / weights.sum()
    pv = np.atleast_1d(np.asarray(phase_var, dtype=float))
    if np.any(pv < 0):
        raise ValueError("phase variance must be non-negative")
    h = SQRT_HALF
    # second splitter on one bin: rows (A_out, B_out) over (A_in, B_in)
    bs = np.kron(np.array([[h, -h], [h, h]]), np.eye(2))
    cx = np.array([1, 0, 1, 0, 1, 0, -1, 0], float)
    cp = np.array([0, 1, 0, 1, 0, -1, 0, 1], float)
    gx, gy, gz = np.meshgrid(nodes, nodes, nodes, indexing="ij")
    wgrid = (weights[:, None, None] * weights[None, :, None] * weights[None, None, :]).ravel()
    out_x, out_p = np.empty(len(pv)), np.empty(len(pv))
    for i, v in enumerate(pv):
        sd = np.sqrt(v)
        rf, ra, rb = (_batched_rot(sd * g.ravel()) for g in (gx, gy, gz))
        n = len(wgrid)
        one = np.zeros((n, 4, 4))
        one[:, 0:2, 0:2] = np.eye(2)
        one[:, 2:4, 2:4] = rf
        lo = np.zeros((n, 4, 4))
        lo[:, 0:2, 0:2] = ra
        lo[:, 2:4, 2:4] = rb
        t1 = lo @ bs @ one  # per bin
        t = np.zeros((n, 8, 8))
        t[:, 0:4, 0:4] = t1
        t[:, 4:8, 4:8] = t1
        ux = cx @ t
        up = cp @ t
        vx = np.einsum("ni,ij,nj->n", ux, pre, ux)
        vp = np.einsum("ni,ij,nj->n", up, pre, up)
        out_x[i] = wgrid @ vx
        out_p[i] = wgrid @ vp
    el = cfg.electronic_noise_ratio
    return out_x + el, out_p + el


def expected_curve(cfg: ExperimentConfig, k, order: int = 12) -> np.ndarray:
    """Expected mean of (X, P) nullifier variances at temporal index ``k`` (1-based)."""
    k = np.asarray(k, dtype=float)
    vx, vp = expected_nullifier_variances(cfg, cfg.phase_drift_rate ** 2 * (k - 1), order)
    return 0.5 * (vx + vp)


def calibrate_drift_rate(cfg: ExperimentConfig, target_k: float = 8000.0, threshold: float = 0.5) -> float:
    """Drift rate at which the mean nullifier variance reaches ``threshold`` near ``target_k``.

    The variance depends on the accumulated phase variance ``rate^2 (k - 1)``
    only, so the crossing index scales as ``1 / rate^2``.
    """
    def excess(v):
        vx, vp = expected_nullifier_variances(cfg, v)
        return 0.5 * (vx[0] + vp[0]) - threshold

    if excess(0.0) >= 0:
        raise ValueError("drift-free variance already at or above the threshold")
    hi = 1e-3
    while excess(hi) < 0:
        hi *= 2.0
        if hi > 10.0:
            raise ValueError("threshold not reached for any phase variance")
    v_star = optimize.brentq(excess, 0.0, hi, xtol=1e-14, rtol=1e-12)
    return float(np.sqrt(v_star / (target_k - 1)))



def nominal_config(
    frames: int = 3000,
    bins_per_frame: int = 5001,
    dc_squeezing_db: float = -6.0,
    phase_drift_rate: float = 0.0,
    seed: int = 0,
    **overrides,
) -> ExperimentConfig:
    """Config with the nominal efficiencies and inputs set to the mode-filtered OPO output.

    The filtered (Sq, ASq) come from :func:`xepr.spectral.loss_budget`, so the
    Monte-Carlo nullifier variances target the analytic prediction.
    """
    losses = LossSpec.nominal()
    budget = loss_budget(dc_squeezing_db, losses)
    sq_db, asq_db = float(db(budget.sq)), float(db(budget.asq))
    kw = dict(
        squeezing_db_A=sq_db,
        squeezing_db_B=sq_db,
        antisqueezing_db_A=asq_db,
        antisqueezing_db_B=asq_db,
        eta2_A=losses.eta2_A,
        eta2_B=losses.eta2_B,
        eta2_AF=losses.eta2_AF,
        eta2_BF=losses.eta2_BF,
        frames=frames,
        bins_per_frame=bins_per_frame,
        phase_drift_rate=phase_drift_rate,
        seed=seed,
    )
    kw.update(overrides)
    return ExperimentConfig(**kw)
