"""Velocity-channel decomposition and the projection rule.

Every slit contributes three generalized velocity channels at each
space-time point: the convective channel carrying v = grad(S)/m and a
right/left pair splitting the signed diffusive velocity u into
non-negative magnitudes u_R = max(u, 0) and u_L = max(-u, 0).  Each
channel owns a planar unit orientation built from the packet's phase
carrier (cos theta, sin theta):

    conv:  (cos theta,  sin theta)
    right: (-sin theta, cos theta)     conv rotated a quarter turn
    left:  (sin theta, -cos theta)     exact negation of right

The handedness of the quarter turn paired with the R/L velocity split
is not a free choice: it is fixed by requiring the assembled current
to reproduce the complex-amplitude current (and with it probability
continuity).  The opposite pairing flips the diffusive cross terms and
breaks both.  All three channels of a slit share the slit's envelope
amplitude.  The
emergent density assigned to channel i with orientation w_i and
amplitude R_i is the signed projection onto the amplitude-weighted mean
orientation M = sum_j R_j w_j over all 3n channels,

    P(i) = R_i * (w_i . M),        J(i) = velocity_i * P(i),

and the totals are the fixed-order sums p_tot = sum_i P(i) and
j_tot = sum_i J(i) with guidance velocity v_tot = j_tot / p_tot away
from nodal points.  Because the left orientation is the exact negation
of the right one, the two diffusive projections of a slit cancel in
p_tot identically, while their currents combine to u * P(right).

Relative phases enter only through dot products of carriers, never
through unwrapped phase values.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import MismatchedPoint
from .packet import PacketEval

__all__ = [
    "ChannelKind",
    "Channel",
    "ChannelSet",
    "FieldSample",
    "build_channels",
    "project",
    "channel_current",
    "assemble",
]

DEFAULT_NODE_FLOOR = 1e-12


class ChannelKind(Enum):
    CONVECTIVE = "convective"
    DIFFUSIVE_RIGHT = "diffusive_right"
    DIFFUSIVE_LEFT = "diffusive_left"


@dataclass(frozen=True)
class Channel:
    """One generalized velocity channel at the evaluation point."""

    kind: ChannelKind
    slit_index: int
    orientation: np.ndarray
    physical_velocity: np.ndarray
    amplitude: np.ndarray


@dataclass(frozen=True)
class ChannelSet:
    """All 3n channels of one evaluation point, in slit order.

    Channel order is (conv, diff_right, diff_left) per slit, slits in
    the order the evaluations were given.  x may be an array; the set
    then describes every grid point at once.
    """

    channels: tuple[Channel, ...]
    x: np.ndarray
    t: float

    @property
    def n_slits(self) -> int:
        return len(self.channels) // 3


@dataclass(frozen=True)
class FieldSample:
    """Assembled totals at one point (or elementwise over a grid).

    v_tot is j_tot / p_tot where the point is not nodal and NaN where it
    is; nodal marks density below the caller's node floor.
    """

    p_tot: np.ndarray
    j_tot: np.ndarray
    v_tot: np.ndarray
    nodal: np.ndarray


def build_channels(evals: list[PacketEval], point=None) -> ChannelSet:
    """Expand per-slit evaluations into the ordered 3n-channel set.

    All evaluations must share one (x, t); a disagreement raises
    MismatchedPoint.  An explicit point, when given, is checked too.
    """
    if not evals:
        raise ValueError("at least one packet evaluation is required")
    x0, t0 = evals[0].x, evals[0].t
    if point is not None:
        px, pt = point
        if not (np.array_equal(np.asarray(px, dtype=float), x0) and float(pt) == t0):
            raise MismatchedPoint("explicit point disagrees with evaluations")
    chans: list[Channel] = []
    for j, ev in enumerate(evals):
        if not (np.array_equal(ev.x, x0) and ev.t == t0):
            raise MismatchedPoint(f"evaluation {j} is not at the common (x, t)")
        c = ev.phase_carrier[..., 0]
        s = ev.phase_carrier[..., 1]
        right = np.stack([-s, c], axis=-1)
        u = np.asarray(ev.diff_velocity, dtype=float)
        chans.append(
            Channel(ChannelKind.CONVECTIVE, j, ev.phase_carrier, ev.conv_velocity, ev.amplitude)
        )
        chans.append(
            Channel(ChannelKind.DIFFUSIVE_RIGHT, j, right, np.maximum(u, 0.0), ev.amplitude)
        )
        chans.append(
            Channel(ChannelKind.DIFFUSIVE_LEFT, j, -right, np.maximum(-u, 0.0), ev.amplitude)
        )
    return ChannelSet(channels=tuple(chans), x=x0, t=t0)


def _mean_orientation(cset: ChannelSet) -> np.ndarray:
    """Amplitude-weighted mean orientation M = sum_j R_j w_j, fixed order."""
    m = np.zeros(np.broadcast_shapes(*(ch.orientation.shape for ch in cset.channels)))
    for ch in cset.channels:
        m = m + ch.amplitude[..., np.newaxis] * ch.orientation
    return m


def project(cset: ChannelSet, i: int) -> np.ndarray:
    """Signed emergent density P(i) = R_i * (w_i . M) of channel i."""
    m = _mean_orientation(cset)
    ch = cset.channels[i]
    return ch.amplitude * (ch.orientation[..., 0] * m[..., 0] + ch.orientation[..., 1] * m[..., 1])


def channel_current(cset: ChannelSet, i: int) -> np.ndarray:
    """Channel current J(i) = physical velocity times projected density."""
    return cset.channels[i].physical_velocity * project(cset, i)


def assemble(
    cset: ChannelSet,
    node_floor: float = DEFAULT_NODE_FLOOR,
    peak: float = 1.0,
) -> FieldSample:
    """Sum all channel densities and currents into one FieldSample.

    Sums run in channel order so repeated runs are bit-identical.  A
    point is nodal when p_tot < node_floor * peak, with the reference
    peak supplied by the caller (1.0 makes the floor absolute).  With a
    single slit there is no interference and the guidance velocity is
    the convective velocity itself, returned without the redundant
    division so the identity holds to the last bit.
    """
    m = _mean_orientation(cset)
    p_tot = np.zeros(m.shape[:-1])
    j_tot = np.zeros(m.shape[:-1])
    for ch in cset.channels:
        p_i = ch.amplitude * (ch.orientation[..., 0] * m[..., 0] + ch.orientation[..., 1] * m[..., 1])
        p_tot = p_tot + p_i
        j_tot = j_tot + ch.physical_velocity * p_i
    nodal = p_tot < node_floor * peak
    with np.errstate(divide="ignore", invalid="ignore"):
        if len(cset.channels) == 3:
            v_raw = np.broadcast_to(cset.channels[0].physical_velocity, p_tot.shape)
        else:
            v_raw = j_tot / np.where(nodal, 1.0, p_tot)
        v_tot = np.where(nodal, np.nan, v_raw)
    return FieldSample(p_tot=p_tot, j_tot=j_tot, v_tot=v_tot, nodal=nodal)
