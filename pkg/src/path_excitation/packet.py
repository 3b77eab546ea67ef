"""Free Gaussian beam emitted by a single slit.

Each slit releases a minimum-uncertainty Gaussian packet at t = 0 that
spreads ballistically while drifting at constant velocity.  With
D = hbar/(2 m) and xi = x - center - drift*t the envelope and phase are

    sigma(t)  = sigma0 * sqrt(1 + (D t / sigma0^2)^2)
    R(x, t)   = weight * (2 pi sigma(t)^2)^(-1/4) * exp(-xi^2 / (4 sigma(t)^2))
    theta     = xi^2 D t / (4 sigma0^2 sigma(t)^2) + m*drift*(x - center)/hbar
                - m*drift^2 t / (2 hbar) + phase0 - arctan(D t / sigma0^2) / 2

and the two velocity moments carried by the packet are

    v(x, t) = drift + xi * D^2 t / (sigma0^2 sigma(t)^2)    (convective)
    u(x, t) = (hbar / m) * xi / (2 sigma(t)^2)              (diffusive)

theta is hbar^(-1) times the action phase, so the complex profile is
psi = R * exp(i theta).  Phases are never consumed directly downstream;
evaluations expose the unit carrier (cos theta, sin theta) instead, and
relative phases come from pairwise products of carriers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NegativeTime

__all__ = [
    "PhysParams",
    "SlitSpec",
    "PacketEval",
    "sigma_t",
    "eval_packet",
    "psi",
    "psi_dx",
    "ballistic_velocity",
]


@dataclass(frozen=True)
class PhysParams:
    """Global physical constants of a run."""

    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self) -> None:
        if not self.hbar > 0.0:
            raise ValueError("hbar > 0 violated")
        if not self.mass > 0.0:
            raise ValueError("mass > 0 violated")

    @property
    def diffusion(self) -> float:
        """Osmotic diffusion scale hbar / (2 m), recomputed on access."""
        return self.hbar / (2.0 * self.mass)


@dataclass(frozen=True)
class SlitSpec:
    """Geometry and preparation of one slit source."""

    center: float
    sigma0: float = 1.0
    drift: float = 0.0
    weight: float = 1.0
    phase0: float = 0.0

    def __post_init__(self) -> None:
        if not self.sigma0 > 0.0:
            raise ValueError("sigma0 > 0 violated")
        if not self.weight >= 0.0:
            raise ValueError("weight >= 0 violated")


@dataclass(frozen=True)
class PacketEval:
    """One packet evaluated at a common space-time point.

    amplitude      weighted envelope, weight * R_unit(x, t), >= 0
    phase_carrier  unit vector (cos theta, sin theta), last axis length 2
    conv_velocity  convective velocity v = grad(S)/m
    diff_velocity  signed diffusive velocity u
    x, t           the evaluation point (x may be an array)
    """

    amplitude: np.ndarray
    phase_carrier: np.ndarray
    conv_velocity: np.ndarray
    diff_velocity: np.ndarray
    x: np.ndarray
    t: float


def _check_time(t: float) -> float:
    t = float(t)
    if t < 0.0:
        raise NegativeTime(f"t = {t} lies before the release time 0")
    return t


def sigma_t(params: PhysParams, slit: SlitSpec, t: float) -> float:
    """Envelope width sigma(t) of the spreading packet."""
    t = _check_time(t)
    tau = params.diffusion * t / slit.sigma0**2
    return slit.sigma0 * np.sqrt(1.0 + tau * tau)


def eval_packet(params: PhysParams, slit: SlitSpec, x, t: float) -> PacketEval:
    """Evaluate envelope, phase carrier, and both velocity moments at (x, t)."""
    t = _check_time(t)
    x = np.asarray(x, dtype=float)
    d = params.diffusion
    s0sq = slit.sigma0**2
    ssq = s0sq + (d * t) ** 2 / s0sq  # sigma(t)^2
    xi = x - slit.center - slit.drift * t

    amp = slit.weight * (2.0 * np.pi * ssq) ** -0.25 * np.exp(-(xi * xi) / (4.0 * ssq))
    theta = (
        xi * xi * d * t / (4.0 * s0sq * ssq)
        + params.mass * slit.drift * (x - slit.center) / params.hbar
        - params.mass * slit.drift**2 * t / (2.0 * params.hbar)
        + slit.phase0
        - 0.5 * np.arctan(d * t / s0sq)
    )
    carrier = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    v = slit.drift + xi * d * d * t / (s0sq * ssq)
    u = (params.hbar / params.mass) * xi / (2.0 * ssq)
    return PacketEval(
        amplitude=amp,
        phase_carrier=carrier,
        conv_velocity=v,
        diff_velocity=u,
        x=x,
        t=t,
    )


def psi(params: PhysParams, slit: SlitSpec, x, t: float) -> np.ndarray:
    """Complex profile weight * R * exp(i theta), evaluated in closed form."""
    t = _check_time(t)
    x = np.asarray(x, dtype=float)
    d = params.diffusion
    s0sq = slit.sigma0**2
    st = s0sq + 1j * d * t  # complex squared width
    xi = x - slit.center - slit.drift * t
    drift_phase = (
        params.mass * slit.drift * (x - slit.center) / params.hbar
        - params.mass * slit.drift**2 * t / (2.0 * params.hbar)
        + slit.phase0
    )
    pref = slit.weight * (2.0 * np.pi * s0sq) ** -0.25 / np.sqrt(1.0 + 1j * d * t / s0sq)
    return pref * np.exp(-(xi * xi) / (4.0 * st) + 1j * drift_phase)


def psi_dx(params: PhysParams, slit: SlitSpec, x, t: float) -> np.ndarray:
    """Spatial derivative of psi, exact: psi * (-xi/(2 s_t) + i m drift / hbar)."""
    t = _check_time(t)
    x = np.asarray(x, dtype=float)
    st = slit.sigma0**2 + 1j * params.diffusion * t
    xi = x - slit.center - slit.drift * t
    return psi(params, slit, x, t) * (
        -xi / (2.0 * st) + 1j * params.mass * slit.drift / params.hbar
    )


def ballistic_velocity(params: PhysParams, slit: SlitSpec, x, t: float):
    """Single-packet velocity field at absolute position x and time t.

    Closed form drift + xi * (D^2 t / sigma0^2) / sigma(t)^2, the same
    quantity eval_packet reports as conv_velocity.  Integrating
    xdot = ballistic_velocity from x(0) = x0 gives the spreading
    streamline x(t) = center + drift*t + (x0 - center) * sigma(t)/sigma0.
    """
    t = _check_time(t)
    x = np.asarray(x, dtype=float)
    d = params.diffusion
    s0sq = slit.sigma0**2
    ssq = s0sq + (d * t) ** 2 / s0sq
    xi = x - slit.center - slit.drift * t
    return slit.drift + xi * d * d * t / (s0sq * ssq)
