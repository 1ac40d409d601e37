"""OPO squeezing spectra, mode-function filtering and loss-budget predictions.

Fourier convention: ``f(w) = int f(t) exp(-i w t) dt``, so that
``int |f(t)|^2 dt = (1/2pi) int |f(w)|^2 dw``.  Filtered levels are written as
``Sq = (1/2pi) int |f(w)|^2 R_-(w) dw`` which equals 1 at zero pump.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special

from .gaussian import LossSpec

TWO_PI = 2.0 * np.pi

# Nominal setup parameters.
NOMINAL_GAMMA = TWO_PI * 17e6  # OPO HWHM, rad/s
NOMINAL_MODE_GAMMA = TWO_PI * 2.5e6  # mode-function bandwidth, rad/s
NOMINAL_T = 157.5e-9  # wave-packet duration, s
NOMINAL_SAMPLE_RATE = 200e6  # oscilloscope, Hz


def db(x):
    return 10.0 * np.log10(x)


def from_db(level):
    return 10.0 ** (np.asarray(level, dtype=float) / 10.0)


@dataclass(frozen=True)
class OPOSpec:
    """Sub-threshold OPO. ``eta`` is the electronic-to-shot noise ratio: a constant
    or a callable of angular frequency."""

    gamma: float = NOMINAL_GAMMA
    pump_x: float = 0.0
    eta: float | Callable[[np.ndarray], np.ndarray] = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("OPO half-width must be positive")
        if not 0.0 <= self.pump_x < 1.0:
            raise ValueError(f"pump parameter must lie in [0, 1), got {self.pump_x}")

    def eta_at(self, omega):
        if callable(self.eta):
            return np.asarray(self.eta(omega), dtype=float)
        return np.full(np.shape(omega), float(self.eta))

    @property
    def gain(self) -> float:
        """Classical parametric amplification gain (1 - x)^-2."""
        return (1.0 - self.pump_x) ** -2


def tabulated_eta(omega_table, eta_table) -> Callable[[np.ndarray], np.ndarray]:
    """Electronic-noise ratio interpolated from a table over |omega|."""
    w = np.asarray(omega_table, dtype=float)
    e = np.asarray(eta_table, dtype=float)
    return lambda omega: np.interp(np.abs(omega), w, e)


def r_plus_minus(opo: OPOSpec, omega) -> tuple[np.ndarray, np.ndarray]:
    """Squeezing / anti-squeezing spectra (R_-, R_+) relative to shot noise."""
    w = np.asarray(omega, dtype=float)
    x = opo.pump_x
    a = (1.0 - opo.eta_at(w)) * 4.0 * x
    u2 = (w / opo.gamma) ** 2
    r_minus = 1.0 - a / ((1.0 + x) ** 2 + u2)
    r_plus = 1.0 + a / ((1.0 - x) ** 2 + u2)
    return r_minus, r_plus


def pump_from_dc_squeezing(level_db: float, eta: float = 0.0) -> float:
    """Pump parameter giving ``R_-(0)`` equal to ``level_db`` (closed form)."""
    r0 = float(from_db(level_db))
    if not 0.0 < r0 <= 1.0:
        raise ValueError("DC squeezing level must be a non-positive dB value")
    c = 1.0 - eta
    if c <= 0:
        raise ValueError("electronic noise at or above shot noise leaves no squeezing")
    # (1 - r0)(1 + x)^2 = 4 c x  ->  (1-r0) x^2 + (2(1-r0) - 4c) x + (1-r0) = 0
    q = 1.0 - r0
    if q == 0.0:
        return 0.0
    b = 2.0 * q - 4.0 * c
    disc = b * b - 4.0 * q * q
    if disc < 0:
        raise ValueError(f"{level_db} dB is unreachable with electronic noise ratio {eta}")
    return float((-b - np.sqrt(disc)) / (2.0 * q))


@dataclass(frozen=True)
class ModeFunction:
    """Gaussian temporal mode ``f(t) ~ exp(-(Gamma t)^2)`` truncated to [-T/2, T/2]."""

    Gamma: float = NOMINAL_MODE_GAMMA
    T: float = NOMINAL_T
    norm: float = field(init=False)

    def __post_init__(self):
        if self.Gamma <= 0 or self.T <= 0:
            raise ValueError("mode-function bandwidth and duration must be positive")
        # int_{-T/2}^{T/2} exp(-2 G^2 t^2) dt
        g2 = np.sqrt(2.0) * self.Gamma
        energy = np.sqrt(np.pi) / g2 * special.erf(g2 * self.T / 2.0)
        object.__setattr__(self, "norm", 1.0 / np.sqrt(energy))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        inside = np.abs(t) <= self.T / 2.0
        return np.where(inside, self.norm * np.exp(-((self.Gamma * t) ** 2)), 0.0)

    def energy(self) -> float:
        val, _ = integrate.quad(lambda t: self(t) ** 2, -self.T / 2, self.T / 2, epsabs=0, epsrel=1e-13)
        return val

    def spectrum(self, omega):
        """|f(w)|^2 of the truncated mode function (closed form through complex erf)."""
        w = np.asarray(omega, dtype=float)
        g = self.Gamma
        a = g * self.T / 2.0
        z = a + 1j * w / (2.0 * g)
        # exp(-w^2/4g^2) erf(z) rewritten with the Faddeeva function to avoid overflow
        tail = np.exp(-a * a) * (np.exp(-0.5j * w * self.T) * special.wofz(1j * z)).real
        amp = self.norm * np.sqrt(np.pi) / g * (np.exp(-(w ** 2) / (4.0 * g * g)) - tail)
        return amp ** 2


def _filtered(opo: OPOSpec, mf: ModeFunction, which: int, rtol: float = 1e-10) -> float:
    def integrand(w):
        rm, rp = r_plus_minus(opo, w)
        return mf.spectrum(w) * ((rm, rp)[which] - 1.0)

    # integrand is even in w; the Lorentzian and filter scales set the breakpoints
    scale = max(opo.gamma, mf.Gamma)
    total = 0.0
    errsum = 0.0
    edges = sorted({0.0, mf.Gamma, 4 * mf.Gamma, 4 * scale, 40 * scale})
    for lo, hi in zip(edges, edges[1:] + [np.inf]):
        val, err = integrate.quad(integrand, lo, hi, epsabs=1e-14 * scale, epsrel=rtol, limit=500)
        total += val
        errsum += err
    if not np.isfinite(total) or errsum > 1e-8 * max(abs(total), 1e-3 * scale):
        raise ArithmeticError("squeezing integral did not converge")
    return 1.0 + 2.0 * total / TWO_PI


def filtered_squeezing(opo: OPOSpec, mf: ModeFunction) -> tuple[float, float]:
    """(Sq, ASq): squeezing and anti-squeezing seen through the mode function."""
    return _filtered(opo, mf, 0), _filtered(opo, mf, 1)


def filtered_squeezing_time_domain(opo: OPOSpec, mf: ModeFunction, n: int = 4001) -> float:
    """Sq from the autocorrelation of the squeezed quadrature (constant eta only).

    ``R_- - 1`` transforms to ``-(2 x gamma (1-eta)/(1+x)) exp(-(1+x) gamma |tau|)``.
    Used as an independent cross-check of :func:`filtered_squeezing`.
    """
    if callable(opo.eta):
        raise ValueError("time-domain form needs a constant electronic-noise ratio")
    x = opo.pump_x
    lam = (1.0 + x) * opo.gamma
    amp = -2.0 * x * opo.gamma * (1.0 - float(opo.eta)) / (1.0 + x)
    t, dt = np.linspace(-mf.T / 2, mf.T / 2, n, retstep=True)
    w = np.full(n, dt)
    w[[0, -1]] *= 0.5
    f = mf(t) * w
    kern = amp * np.exp(-lam * np.abs(t[:, None] - t[None, :]))
    return float(1.0 + f @ kern @ f)


@dataclass(frozen=True)
class NullifierPrediction:
    var_x: float
    var_p: float

    @property
    def db_x(self) -> float:
        return float(db(self.var_x))

    @property
    def db_p(self) -> float:
        return float(db(self.var_p))

    def as_dict(self) -> dict:
        return {"var_x": self.var_x, "var_p": self.var_p, "db_x": self.db_x, "db_p": self.db_p}


def predicted_nullifier_variances(
    sq_A: float, asq_A: float, sq_B: float, asq_B: float, losses: LossSpec
) -> NullifierPrediction:
    """Loss-weighted nullifier variances, vacuum nullifier = 1.

    <X^2> = (eA + eAF)^2 (SqA - 1)/4 + (eB - eBF)^2 (ASqB - 1)/4 + 1
    <P^2> = (eB + eBF)^2 (SqB - 1)/4 + (eA - eAF)^2 (ASqA - 1)/4 + 1
    with e the amplitude efficiencies (square roots of the eta2 values).
    """
    for sq, asq in ((sq_A, asq_A), (sq_B, asq_B)):
        if sq > 1.0 + 1e-12 or asq < 1.0 - 1e-12:
            raise ValueError("expected Sq <= 1 <= ASq")
    ea, eb, eaf, ebf = np.sqrt([losses.eta2_A, losses.eta2_B, losses.eta2_AF, losses.eta2_BF])
    vx = 0.25 * (ea + eaf) ** 2 * (sq_A - 1) + 0.25 * (eb - ebf) ** 2 * (asq_B - 1) + 1.0
    vp = 0.25 * (eb + ebf) ** 2 * (sq_B - 1) + 0.25 * (ea - eaf) ** 2 * (asq_A - 1) + 1.0
    return NullifierPrediction(float(vx), float(vp))


@dataclass(frozen=True)
class LossBudget:
    pump_x: float
    sq: float
    asq: float
    prediction: NullifierPrediction

    def as_dict(self) -> dict:
        return {
            "pump_x": self.pump_x,
            "sq": self.sq,
            "asq": self.asq,
            "sq_db": float(db(self.sq)),
            "asq_db": float(db(self.asq)),
            **self.prediction.as_dict(),
        }


def loss_budget(
    dc_squeezing_db: float = -6.0,
    losses: LossSpec | None = None,
    gamma: float = NOMINAL_GAMMA,
    mf: ModeFunction | None = None,
    eta: float = 0.0,
) -> LossBudget:
    """Both OPOs pumped to the same DC squeezing level, filtered and pushed through the losses."""
    losses = LossSpec.nominal() if losses is None else losses
    mf = mf or ModeFunction()
    x = pump_from_dc_squeezing(dc_squeezing_db, eta)
    sq, asq = filtered_squeezing(OPOSpec(gamma, x, eta), mf)
    return LossBudget(x, sq, asq, predicted_nullifier_variances(sq, asq, sq, asq, losses))


def synthesize_trace(
    opo: OPOSpec,
    duration: float,
    sample_rate: float,
    seed=None,
    quadrature: str = "squeezed",
) -> np.ndarray:
    """Homodyne trace of one quadrature as a stationary Gaussian process.

    White noise with per-sample variance ``sample_rate/4`` (shot noise) is
    shaped in the frequency domain by ``sqrt(R(w))``.  Integrating against a
    unit-energy mode function therefore gives variance ``Sq/4`` (or ``ASq/4``).
    """
    n = int(round(duration * sample_rate))
    if n < 2:
        raise ValueError("trace too short")
    rng = np.random.default_rng(seed)
    white = rng.standard_normal(n) * np.sqrt(sample_rate / 4.0)
    spec = np.fft.rfft(white)
    w = TWO_PI * np.fft.rfftfreq(n, d=1.0 / sample_rate)
    rm, rp = r_plus_minus(opo, w)
    shape = rm if quadrature == "squeezed" else rp
    return np.fft.irfft(spec * np.sqrt(shape), n=n)
