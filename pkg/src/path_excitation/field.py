"""Closed-form pairwise assembly of the n-slit emergent field.

This is the fast production path.  Expanding the channel projections of
`channels` analytically collapses them into pairwise sums over slits,

    P_tot = sum_i R_i^2  +  sum_{i<j} 2 R_i R_j cos(phi_ij)
    J_tot = sum_i R_i^2 v_i
            + sum_{i<j} R_i R_j [ (v_i + v_j) cos(phi_ij)
                                  + (u_j - u_i) sin(phi_ij) ]

with phi_ij = theta_i - theta_j the signed relative phase.  The order
of the u difference against that phase sign is fixed by probability
continuity: the other pairing fails dP/dt + dJ/dx = 0 and the
complex-amplitude cross-check.  The cosines and sines come from
pairwise products of the unit phase carriers,

    cos(phi_ij) = c_i c_j + s_i s_j,    sin(phi_ij) = s_i c_j - c_i s_j,

so no unwrapped phase value is ever consumed.  The channel machinery in
`channels` stays available as a verification twin; the two paths agree
to rounding and the test suite enforces it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import DEFAULT_NODE_FLOOR, FieldSample
from .errors import MismatchedPoint, NegativeTime
from .packet import PacketEval, PhysParams, SlitSpec, eval_packet, sigma_t

__all__ = [
    "GridSpec",
    "SlitMask",
    "open_evals",
    "intensity",
    "pairwise_field",
    "field_grid",
    "peak_bound",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform evaluation grid at a single time."""

    x_min: float
    x_max: float
    n_points: int
    t: float

    def __post_init__(self) -> None:
        if not self.x_min < self.x_max:
            raise ValueError("x_min < x_max violated")
        if not self.n_points >= 2:
            raise ValueError("n_points >= 2 violated")
        if not self.t >= 0.0:
            raise NegativeTime("t >= 0 violated")

    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)


@dataclass(frozen=True)
class SlitMask:
    """Subset of slit indices that are open.

    The empty mask is a defined degenerate case: zero intensity
    everywhere, every point nodal.
    """

    open: frozenset[int]

    def __init__(self, open) -> None:
        object.__setattr__(self, "open", frozenset(int(i) for i in open))
        if any(i < 0 for i in self.open):
            raise ValueError("mask indices must be non-negative")

    @classmethod
    def all_open(cls, n_slits: int) -> "SlitMask":
        return cls(range(n_slits))

    def indices(self) -> tuple[int, ...]:
        return tuple(sorted(self.open))

    def check_against(self, n_slits: int) -> None:
        for i in self.open:
            if i >= n_slits:
                raise ValueError(f"mask index {i} out of range for {n_slits} slits")


def open_evals(
    params: PhysParams, slits: list[SlitSpec], mask: SlitMask, x, t: float
) -> list[PacketEval]:
    """Evaluate the open slits at (x, t), in ascending slit order."""
    mask.check_against(len(slits))
    return [eval_packet(params, slits[i], x, t) for i in mask.indices()]


def _common_point(evals: list[PacketEval]) -> None:
    x0, t0 = evals[0].x, evals[0].t
    for j, ev in enumerate(evals[1:], start=1):
        if not (np.array_equal(ev.x, x0) and ev.t == t0):
            raise MismatchedPoint(f"evaluation {j} is not at the common (x, t)")


def _pairwise(evals: list[PacketEval]):
    """Pairwise-closed-form (P_tot, J_tot); fixed summation order."""
    n = len(evals)
    amp = [np.asarray(ev.amplitude, dtype=float) for ev in evals]
    cos = [ev.phase_carrier[..., 0] for ev in evals]
    sin = [ev.phase_carrier[..., 1] for ev in evals]
    v = [ev.conv_velocity for ev in evals]
    u = [ev.diff_velocity for ev in evals]

    shape = np.broadcast_shapes(*(a.shape for a in amp))
    p = np.zeros(shape)
    j = np.zeros(shape)
    for i in range(n):
        p = p + amp[i] * amp[i]
        j = j + amp[i] * amp[i] * v[i]
    for i in range(n):
        for k in range(i + 1, n):
            cross = amp[i] * amp[k]
            cphi = cos[i] * cos[k] + sin[i] * sin[k]
            sphi = sin[i] * cos[k] - cos[i] * sin[k]
            p = p + 2.0 * cross * cphi
            j = j + cross * ((v[i] + v[k]) * cphi + (u[k] - u[i]) * sphi)
    return p, j


def intensity(evals: list[PacketEval]) -> np.ndarray:
    """Total detection intensity P_tot; an empty evaluation list gives 0."""
    if not evals:
        return np.zeros(())
    _common_point(evals)
    p, _ = _pairwise(evals)
    return p


def pairwise_field(
    evals: list[PacketEval],
    node_floor: float = DEFAULT_NODE_FLOOR,
    peak: float = 1.0,
) -> FieldSample:
    """FieldSample from the pairwise closed form.

    Matches channels.assemble(build_channels(evals)) to rounding; the
    nodal floor is node_floor * peak with the peak supplied by the
    caller, as in `channels`.  A single packet carries no interference,
    so its guidance velocity is the convective velocity verbatim.
    """
    if not evals:
        raise ValueError("at least one packet evaluation is required")
    _common_point(evals)
    p, j = _pairwise(evals)
    nodal = p < node_floor * peak
    with np.errstate(divide="ignore", invalid="ignore"):
        if len(evals) == 1:
            v_raw = np.broadcast_to(evals[0].conv_velocity, p.shape)
        else:
            v_raw = j / np.where(nodal, 1.0, p)
        v_tot = np.where(nodal, np.nan, v_raw)
    return FieldSample(p_tot=p, j_tot=j, v_tot=v_tot, nodal=nodal)


def peak_bound(params: PhysParams, slits: list[SlitSpec], mask: SlitMask, t: float) -> float:
    """Analytic upper bound on P_tot at time t: all packets in phase.

    (sum_i a_i)^2 with a_i the peak envelope of open slit i.  Serves as
    the nodal reference when no grid maximum is available, e.g. during
    trajectory integration at arbitrary points.
    """
    mask.check_against(len(slits))
    total = 0.0
    for i in mask.indices():
        s = slits[i]
        total += s.weight * (2.0 * np.pi * sigma_t(params, s, t) ** 2) ** -0.25
    return total * total


def field_grid(
    params: PhysParams,
    slits: list[SlitSpec],
    mask: SlitMask,
    grid: GridSpec,
    node_floor: float = DEFAULT_NODE_FLOOR,
) -> list[tuple[float, FieldSample]]:
    """Evaluate the field on the grid, ordered by x.

    The nodal reference peak is the maximum P_tot over this grid.  An
    empty mask yields zero intensity with every point flagged nodal.
    """
    xs = grid.points()
    if not mask.open:
        return [
            (float(x), FieldSample(p_tot=0.0, j_tot=0.0, v_tot=np.nan, nodal=True))
            for x in xs
        ]
    evals = open_evals(params, slits, mask, xs, grid.t)
    p, j = _pairwise(evals)
    peak = float(np.max(p))
    nodal = p < node_floor * peak if peak > 0.0 else np.ones(p.shape, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        if len(evals) == 1:
            v_raw = np.broadcast_to(evals[0].conv_velocity, p.shape)
        else:
            v_raw = j / np.where(nodal, 1.0, p)
        v = np.where(nodal, np.nan, v_raw)
    return [
        (
            float(xs[k]),
            FieldSample(
                p_tot=float(p[k]),
                j_tot=float(j[k]),
                v_tot=float(v[k]),
                nodal=bool(nodal[k]),
            ),
        )
        for k in range(xs.size)
    ]
