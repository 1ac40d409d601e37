"""Nullifier statistics, inseparability certificates and quadrature extraction.

Nullifiers are built per frame from detector values in a common basis:

    X_k = xA_k + xB_k + xA_{k+1} - xB_{k+1}     (x-basis frames)
    P_k = pA_k + pB_k - pA_{k+1} + pB_{k+1}     (p-basis frames)

Variances are reported relative to the vacuum nullifier variance, which is 1
with vacuum quadrature variance 1/4.  Temporal indices ``k`` are 1-based.
"""

from __future__ import annotations

import csv
import json
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .experiment import BASES, BinSample, FrameSamples
from .spectral import ModeFunction, db

STRICT_BOUND = 0.5  # each nullifier variance below -3.01 dB
CI_LEVEL = 0.95

# The seven bipartitions of {A_k, B_k, A_{k+1}, B_{k+1}}: (label, uses P_{k+1}, bound)
VLF_CASES = (
    ("A_k | B_k A_k+1 B_k+1", False, 1.0),
    ("B_k | A_k A_k+1 B_k+1", False, 1.0),
    ("A_k+1 | A_k B_k B_k+1", False, 1.0),
    ("B_k+1 | A_k B_k A_k+1", False, 1.0),
    ("A_k B_k | A_k+1 B_k+1", False, 2.0),
    ("A_k A_k+1 | B_k B_k+1", True, 1.0),
    ("A_k B_k+1 | B_k A_k+1", True, 1.0),
)


class AnalysisError(ValueError):
    pass


def nullifier_series(value_A: np.ndarray, value_B: np.ndarray, basis: str) -> np.ndarray:
    """Per-frame nullifier values from one frame's detector outputs."""
    a = np.asarray(value_A, dtype=float)
    b = np.asarray(value_B, dtype=float)
    if basis == "x":
        return a[:-1] + b[:-1] + a[1:] - b[1:]
    if basis == "p":
        return a[:-1] + b[:-1] - a[1:] + b[1:]
    raise ValueError(f"unknown basis {basis!r}")


@dataclass
class _Moments:
    count: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    s1: np.ndarray = field(default_factory=lambda: np.zeros(0))
    s2: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def grow(self, n: int):
        if n > len(self.count):
            pad = n - len(self.count)
            self.count = np.concatenate([self.count, np.zeros(pad, dtype=np.int64)])
            self.s1 = np.concatenate([self.s1, np.zeros(pad)])
            self.s2 = np.concatenate([self.s2, np.zeros(pad)])

    def add(self, values: np.ndarray):
        self.grow(len(values))
        n = len(values)
        self.count[:n] += 1
        self.s1[:n] += values
        self.s2[:n] += values * values

    def merge(self, other: "_Moments"):
        self.grow(len(other.count))
        n = len(other.count)
        self.count[:n] += other.count
        self.s1[:n] += other.s1
        self.s2[:n] += other.s2


@dataclass
class NullifierAccumulator:
    """Associative per-k accumulation of (count, sum, sum of squares) for X and P."""

    x: _Moments = field(default_factory=_Moments)
    p: _Moments = field(default_factory=_Moments)
    frames_x: int = 0
    frames_p: int = 0
    skipped: int = 0  # mixed-basis frames carry no nullifier

    def add_frame(self, frame: FrameSamples):
        if frame.basis_A != frame.basis_B:
            self.skipped += 1
            return
        if len(frame) < 2:
            return
        vals = nullifier_series(frame.value_A, frame.value_B, frame.basis_A)
        if frame.basis_A == "x":
            self.x.add(vals)
            self.frames_x += 1
        else:
            self.p.add(vals)
            self.frames_p += 1

    def merge(self, other: "NullifierAccumulator") -> "NullifierAccumulator":
        self.x.merge(other.x)
        self.p.merge(other.p)
        self.frames_x += other.frames_x
        self.frames_p += other.frames_p
        self.skipped += other.skipped
        return self

    def report(self, mean_subtract: bool = False, reference=None, min_frames: int = 2) -> "NullifierReport":
        """Per-k variances.  ``reference`` rescales (scalar or per-k array, e.g. from a vacuum run)."""
        nk = max(len(self.x.count), len(self.p.count))
        if nk == 0:
            raise AnalysisError("no nullifier samples")
        self.x.grow(nk)
        self.p.grow(nk)
        vx, lox, hix = _variance(self.x, mean_subtract, min_frames)
        vp, lop, hip = _variance(self.p, mean_subtract, min_frames)
        ref = np.ones(nk) if reference is None else np.broadcast_to(np.asarray(reference, float), (nk,))
        return NullifierReport(
            k=np.arange(1, nk + 1),
            var_x=vx / ref,
            var_p=vp / ref,
            n_x=self.x.count.copy(),
            n_p=self.p.count.copy(),
            ci_x=np.stack([lox, hix]) / ref,
            ci_p=np.stack([lop, hip]) / ref,
            mean_subtracted=mean_subtract,
        )


def _variance(m: _Moments, mean_subtract: bool, min_frames: int):
    n = m.count.astype(float)
    ok = m.count >= min_frames
    with np.errstate(invalid="ignore", divide="ignore"):
        if mean_subtract:
            dof = n - 1
            ss = m.s2 - m.s1 ** 2 / n
        else:
            # population mean is zero: sum of squares over n is already unbiased
            dof = n
            ss = m.s2
        var = np.where(ok, ss / dof, np.nan)
        a = (1.0 - CI_LEVEL) / 2.0
        lo = np.where(ok, ss / stats.chi2.ppf(1.0 - a, np.maximum(dof, 1)), np.nan)
        hi = np.where(ok, ss / stats.chi2.ppf(a, np.maximum(dof, 1)), np.nan)
    return var, lo, hi


@dataclass(frozen=True)
class Certificate:
    pairwise_K: int  # largest K with all seven conditions holding for k <= K
    strict_K: int  # largest K with Var X_k, Var P_k < 1/2 for k <= K
    evaluated_k: int  # number of indices where all seven cases are defined
    first_failure: tuple[int, str] | None  # first pairwise failure (k, case label)
    strict_first_failure: tuple[int, str] | None
    margins: np.ndarray  # (7, evaluated_k) bound minus left-hand side; > 0 means denied

    @property
    def fully_inseparable(self) -> bool:
        return self.evaluated_k > 0 and self.pairwise_K == self.evaluated_k

    @property
    def headline(self) -> bool:
        """Stricter criterion (every nullifier below 1/2) over the whole range."""
        return self.strict_first_failure is None and self.strict_K > 0

    def as_dict(self) -> dict:
        return {
            "pairwise_K": self.pairwise_K,
            "strict_K": self.strict_K,
            "evaluated_k": self.evaluated_k,
            "fully_inseparable": self.fully_inseparable,
            "headline_strict": self.headline,
            "first_failure": list(self.first_failure) if self.first_failure else None,
            "strict_first_failure": list(self.strict_first_failure) if self.strict_first_failure else None,
        }


def vlf_certificate(var_x, var_p) -> Certificate:
    """Evaluate the seven bipartition inequalities and the strict 1/2 bound for every k.

    A case is denied at k when its left-hand side falls below its separability
    bound.  Cases using ``P_{k+1}`` need index ``k+1``, so the pairwise range ends
    one index before the data.
    """
    vx = np.asarray(var_x, dtype=float)
    vp = np.asarray(var_p, dtype=float)
    if vx.shape != vp.shape or vx.ndim != 1:
        raise AnalysisError("X and P variances must be 1-D arrays of equal length")
    gaps = np.flatnonzero(~(np.isfinite(vx) & np.isfinite(vp)))
    if gaps.size:
        raise AnalysisError(f"gap in nullifier variances at k={gaps[0] + 1}")
    nk = len(vx)
    ne = max(nk - 1, 0)
    margins = np.empty((len(VLF_CASES), ne))
    for i, (_, shifted, bound) in enumerate(VLF_CASES):
        lhs = vx[:ne] + (vp[1:ne + 1] if shifted else vp[:ne])
        margins[i] = bound - lhs
    denied = np.all(margins > 0, axis=0)
    bad = np.flatnonzero(~denied)
    if bad.size:
        k0 = int(bad[0])
        case = VLF_CASES[int(np.flatnonzero(margins[:, k0] <= 0)[0])][0]
        pairwise_K, first = k0, (k0 + 1, case)
    else:
        pairwise_K, first = ne, None
    strict_ok = (vx < STRICT_BOUND) & (vp < STRICT_BOUND)
    sbad = np.flatnonzero(~strict_ok)
    if sbad.size:
        k0 = int(sbad[0])
        which = "X" if vx[k0] >= STRICT_BOUND else "P"
        strict_K, sfirst = k0, (k0 + 1, f"Var {which}_k >= 1/2")
    else:
        strict_K, sfirst = nk, None
    return Certificate(pairwise_K, strict_K, ne, first, sfirst, margins)


@dataclass
class NullifierReport:
    k: np.ndarray
    var_x: np.ndarray
    var_p: np.ndarray
    n_x: np.ndarray
    n_p: np.ndarray
    ci_x: np.ndarray  # (2, nk) lower/upper 95% bounds
    ci_p: np.ndarray
    mean_subtracted: bool = False

    @property
    def db_x(self) -> np.ndarray:
        return db(self.var_x)

    @property
    def db_p(self) -> np.ndarray:
        return db(self.var_p)

    @property
    def missing_k(self) -> np.ndarray:
        return self.k[~(np.isfinite(self.var_x) & np.isfinite(self.var_p))]

    def certificate(self) -> Certificate:
        ok = np.isfinite(self.var_x) & np.isfinite(self.var_p)
        n = int(np.argmin(ok)) if not ok.all() else len(ok)
        return vlf_certificate(self.var_x[:n], self.var_p[:n])

    def window(self, k0: int = 1, k1: int = 1000) -> dict:
        k1 = min(k1, int(self.k[-1]))
        out = {"window": [k0, k1]}
        for q in ("x", "p"):
            try:
                m, se = window_summary(self, (k0, k1), q)
            except AnalysisError:
                m = se = None
            out[q] = {"mean_db": m, "stderr_db": se}
        return out

    def as_dict(self) -> dict:
        def clean(a):
            return [None if not np.isfinite(v) else float(v) for v in np.asarray(a, dtype=float)]

        return {
            "k": self.k.tolist(),
            "var_x": clean(self.var_x),
            "var_p": clean(self.var_p),
            "db_x": clean(self.db_x),
            "db_p": clean(self.db_p),
            "n_x": self.n_x.tolist(),
            "n_p": self.n_p.tolist(),
            "ci_x": [clean(self.ci_x[0]), clean(self.ci_x[1])],
            "ci_p": [clean(self.ci_p[0]), clean(self.ci_p[1])],
            "missing_k": self.missing_k.tolist(),
            "mean_subtracted": self.mean_subtracted,
            "strict_bound_db": float(db(STRICT_BOUND)),
            "window_first_1000": self.window(1, 1000),
            "certificate": self.certificate().as_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)

    def write_plot_csv(self, path) -> Path:
        """Columns k, varX_db, varP_db, ciX, ciP; the ci columns are 95% half-widths in dB."""
        path = Path(path)
        cix = 0.5 * (db(self.ci_x[1]) - db(self.ci_x[0]))
        cip = 0.5 * (db(self.ci_p[1]) - db(self.ci_p[0]))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "varX_db", "varP_db", "ciX", "ciP"])
            for row in zip(self.k.tolist(), self.db_x, self.db_p, cix, cip):
                w.writerow([row[0]] + [f"{v:.6f}" for v in row[1:]])
        return path


def _as_frames(samples) -> Iterator[FrameSamples]:
    """Accept FrameSamples or a stream of BinSample records grouped by frame."""
    pending: list[BinSample] = []
    for s in samples:
        if isinstance(s, FrameSamples):
            yield s
            continue
        if pending and s.frame != pending[-1].frame:
            yield _records_to_frame(pending)
            pending = []
        pending.append(s)
    if pending:
        yield _records_to_frame(pending)


def _records_to_frame(recs: list[BinSample]) -> FrameSamples:
    recs = sorted(recs, key=lambda r: r.k)
    ks = [r.k for r in recs]
    if ks != list(range(1, len(recs) + 1)):
        raise AnalysisError(f"frame {recs[0].frame}: temporal indices are not 1..{len(recs)}")
    ba, bb = recs[0].basis_A, recs[0].basis_B
    if any(r.basis_A != ba or r.basis_B != bb for r in recs):
        raise AnalysisError(f"frame {recs[0].frame}: basis changes within a frame")
    return FrameSamples(
        recs[0].frame, ba, bb, np.array([r.value_A for r in recs]), np.array([r.value_B for r in recs])
    )


def accumulate(samples: Iterable) -> NullifierAccumulator:
    acc = NullifierAccumulator()
    for fr in _as_frames(samples):
        acc.add_frame(fr)
    return acc


def nullifier_variances(
    samples: Iterable, mean_subtract: bool = False, reference=None, min_frames: int = 2
) -> NullifierReport:
    """Per-k X/P nullifier variances with chi-square confidence intervals.

    ``samples`` is a stream of FrameSamples or BinSample records.  Indices with
    fewer than ``min_frames`` frames of a basis are reported as missing (NaN).
    """
    return accumulate(samples).report(mean_subtract, reference, min_frames)


def window_summary(report: NullifierReport, window: tuple[int, int], quadrature: str = "x") -> tuple[float, float]:
    """Mean of per-k dB values over ``k0..k1`` (inclusive) and its standard error."""
    k0, k1 = window
    sel = (report.k >= k0) & (report.k <= k1)
    vals = {"x": report.db_x, "p": report.db_p}[quadrature][sel]
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        raise AnalysisError(f"empty window [{k0}, {k1}]")
    se = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else float("nan")
    return float(vals.mean()), se


# --- CSV ingestion -------------------------------------------------------------------------

HEADER = ["frame", "k", "basis_A", "value_A", "basis_B", "value_B"]


def read_samples_csv(path) -> Iterator[BinSample]:
    """Stream BinSample records; malformed rows raise AnalysisError with the line number."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != HEADER:
            raise AnalysisError(f"line 1: expected header {','.join(HEADER)}")
        for row in reader:
            line = reader.line_num
            if len(row) != 6:
                raise AnalysisError(f"line {line}: expected 6 fields, got {len(row)}")
            try:
                frame, k = int(row[0]), int(row[1])
                va, vb = float(row[3]), float(row[5])
            except ValueError as exc:
                raise AnalysisError(f"line {line}: {exc}") from None
            if row[2] not in BASES or row[4] not in BASES:
                raise AnalysisError(f"line {line}: basis must be x or p")
            if not (np.isfinite(va) and np.isfinite(vb)):
                raise AnalysisError(f"line {line}: non-finite value")
            if frame < 0 or k < 1:
                raise AnalysisError(f"line {line}: frame must be >= 0 and k >= 1")
            yield BinSample(frame, k, row[2], va, row[4], vb)


# --- continuous traces ---------------------------------------------------------------------


def extract_quadratures(trace, sample_rate: float, mf: ModeFunction, t0: float = 0.0) -> np.ndarray:
    """Integrate a homodyne trace against the mode function in consecutive bins of length T.

    Bin ``k`` (0-based) covers ``[t0 + kT, t0 + (k+1)T)``, centred on the mode
    function.  A discrete Riemann sum is used with weights ``f(t_i) / sample_rate``.
    For a trace with per-sample variance ``sample_rate / 4`` (shot noise, see
    :func:`xepr.spectral.synthesize_trace`) the weights are rescaled so that each
    bin has exactly variance 1/4, which removes the discretisation error of the
    continuous normalisation.
    """
    trace = np.asarray(trace, dtype=float)
    if trace.ndim != 1:
        raise ValueError("trace must be one-dimensional")
    spb = mf.T * sample_rate
    if spb < 20:
        raise ValueError(f"only {spb:.1f} samples per bin; need at least 20")
    n = len(trace)
    nbins = int(np.floor((n / sample_rate - t0) / mf.T + 1e-9))
    if nbins < 1:
        raise ValueError("trace shorter than one bin")
    t = np.arange(n) / sample_rate
    out = np.empty(nbins)
    for k in range(nbins):
        lo = t0 + k * mf.T
        i0 = int(np.ceil(lo * sample_rate - 1e-9))
        i1 = int(np.ceil((lo + mf.T) * sample_rate - 1e-9))
        i1 = min(i1, n)
        w = mf(t[i0:i1] - lo - mf.T / 2) / sample_rate
        # discrete counterpart of int |f|^2 dt = 1
        w = w / np.sqrt(np.sum(w * w) * sample_rate)
        out[k] = w @ trace[i0:i1]
    return out
