"""Closed-form pairwise field tests: grids, masks, and the n-slit sums."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import trapezoid

from path_excitation.channels import assemble, build_channels
from path_excitation.errors import MismatchedPoint, NegativeTime
from path_excitation.field import (
    GridSpec,
    SlitMask,
    field_grid,
    intensity,
    open_evals,
    pairwise_field,
    peak_bound,
)
from path_excitation.packet import PhysParams, SlitSpec, eval_packet, sigma_t

from test_channels import make_eval

P = PhysParams()
SYMMETRIC = [SlitSpec(center=-3.0), SlitSpec(center=3.0)]


class TestGridSpec:
    def test_points_span_and_spacing(self):
        g = GridSpec(-2.0, 2.0, 5, 1.0)
        assert_allclose(g.points(), [-2.0, -1.0, 0.0, 1.0, 2.0])

    def test_rejects_bad_bounds(self):
        with pytest.raises(ValueError, match="x_min < x_max"):
            GridSpec(1.0, 1.0, 10, 0.0)

    def test_rejects_single_point(self):
        with pytest.raises(ValueError, match="n_points >= 2"):
            GridSpec(0.0, 1.0, 1, 0.0)

    def test_rejects_negative_time(self):
        with pytest.raises(NegativeTime):
            GridSpec(0.0, 1.0, 10, -0.5)


class TestSlitMask:
    def test_all_open(self):
        assert SlitMask.all_open(3).indices() == (0, 1, 2)

    def test_indices_sorted(self):
        assert SlitMask([2, 0]).indices() == (0, 2)

    def test_out_of_range_detected(self):
        with pytest.raises(ValueError, match="out of range"):
            SlitMask([3]).check_against(2)

    def test_negative_index_rejected(self):
        with pytest.raises(ValueError):
            SlitMask([-1])

    def test_empty_mask_is_legal(self):
        m = SlitMask([])
        m.check_against(5)
        assert m.indices() == ()


def test_intensity_single_envelope():
    ev = make_eval(0.8, 1.3, x=0.0)
    assert float(intensity([ev])) == pytest.approx(0.64, rel=1e-14)


def test_intensity_two_slit_closed_form():
    r1, r2, phi = 0.9, 1.4, 0.7
    evals = [make_eval(r1, phi), make_eval(r2, 0.0)]
    expected = r1**2 + r2**2 + 2 * r1 * r2 * np.cos(phi)
    assert float(intensity(evals)) == pytest.approx(expected, rel=1e-14)


def test_intensity_three_slit_closed_form():
    r = (0.8, 1.1, 0.6)
    phi, chi = 0.9, -0.4
    evals = [
        make_eval(r[0], phi + chi),
        make_eval(r[1], chi),
        make_eval(r[2], 0.0),
    ]
    expected = (
        r[0] ** 2
        + r[1] ** 2
        + r[2] ** 2
        + 2 * r[0] * r[1] * np.cos(phi)
        + 2 * r[0] * r[2] * np.cos(phi + chi)
        + 2 * r[1] * r[2] * np.cos(chi)
    )
    assert float(intensity(evals)) == pytest.approx(expected, rel=1e-13)


def test_intensity_rejects_mismatched_points():
    with pytest.raises(MismatchedPoint):
        intensity([make_eval(1.0, 0.0, x=0.0), make_eval(1.0, 0.0, x=2.0)])


def test_pairwise_matches_channel_assembly_three_slit():
    slits = [
        SlitSpec(center=-2.0, sigma0=0.8, drift=0.3, weight=0.7, phase0=0.4),
        SlitSpec(center=0.5, sigma0=1.2, drift=-0.2, weight=1.3, phase0=-0.1),
        SlitSpec(center=2.5, sigma0=1.0, drift=0.1, weight=1.0, phase0=0.9),
    ]
    xs = np.linspace(-9.0, 9.0, 501)
    evals = [eval_packet(P, s, xs, 1.7) for s in slits]
    closed = pairwise_field(evals)
    twin = assemble(build_channels(evals))
    scale = float(np.max(closed.p_tot))
    assert np.max(np.abs(closed.p_tot - twin.p_tot)) < 1e-13 * scale
    assert np.max(np.abs(closed.j_tot - twin.j_tot)) < 1e-13 * scale


def test_pairwise_single_slit_velocity_exact():
    ev = eval_packet(P, SlitSpec(center=1.0, drift=-0.4), np.linspace(-4, 6, 80), 0.9)
    fs = pairwise_field([ev])
    assert np.array_equal(fs.v_tot, ev.conv_velocity)
    assert np.array_equal(fs.p_tot, ev.amplitude**2)


def test_classical_reduction_drops_sin_terms():
    """Forcing u to zero leaves P alone and reduces J to the
    convective pairwise sum."""
    rng = np.random.default_rng(3)
    r = rng.uniform(0.3, 1.2, 3)
    th = rng.uniform(-2.0, 2.0, 3)
    v = rng.uniform(-1.5, 1.5, 3)
    u = rng.uniform(-1.0, 1.0, 3)
    full = [make_eval(r[i], th[i], v=v[i], u=u[i]) for i in range(3)]
    classical = [make_eval(r[i], th[i], v=v[i], u=0.0) for i in range(3)]
    fs_full = pairwise_field(full)
    fs_classical = pairwise_field(classical)
    assert np.array_equal(fs_full.p_tot, fs_classical.p_tot)
    expected_j = sum(r[i] ** 2 * v[i] for i in range(3))
    for i in range(3):
        for j in range(i + 1, 3):
            expected_j += r[i] * r[j] * (v[i] + v[j]) * np.cos(th[i] - th[j])
    assert float(fs_classical.j_tot) == pytest.approx(expected_j, abs=1e-13)


def test_grid_two_slit_symmetry_and_central_fringe():
    grid = GridSpec(-15.0, 15.0, 2001, 2.0)
    rows = field_grid(P, SYMMETRIC, SlitMask.all_open(2), grid)
    xs = np.array([x for x, _ in rows])
    p = np.array([fs.p_tot for _, fs in rows])
    v = np.array([fs.v_tot for _, fs in rows])
    nodal = np.array([fs.nodal for _, fs in rows])
    assert np.all(np.diff(xs) > 0)
    peak = float(np.max(p))
    # mirror symmetry of intensity, antisymmetry of velocity
    assert np.max(np.abs(p - p[::-1])) < 1e-12 * peak
    ok = ~nodal & ~nodal[::-1]
    assert np.max(np.abs(v[ok] + v[::-1][ok])) < 1e-10


def test_grid_central_fringe_dominates_when_packets_overlap():
    """In phase at x = 0 by symmetry, so once the envelopes overlap
    appreciably the constructive central fringe beats the single-packet
    humps.  At small spread the humps win instead, so both geometries
    are scanned."""
    mask = SlitMask.all_open(2)
    rows = field_grid(P, SYMMETRIC, mask, GridSpec(-20.0, 20.0, 2001, 6.0))
    xs = np.array([x for x, _ in rows])
    p = np.array([fs.p_tot for _, fs in rows])
    assert abs(xs[int(np.argmax(p))]) < 1e-12

    narrow = [SlitSpec(center=-1.0), SlitSpec(center=1.0)]
    rows = field_grid(P, narrow, mask, GridSpec(-12.0, 12.0, 2001, 2.0))
    xs = np.array([x for x, _ in rows])
    p = np.array([fs.p_tot for _, fs in rows])
    assert abs(xs[int(np.argmax(p))]) < 1e-12


def test_grid_single_slit_variance():
    slit = SlitSpec(center=0.5)
    grid = GridSpec(0.5 - 14.0, 0.5 + 14.0, 4001, 2.0)
    rows = field_grid(P, [slit], SlitMask([0]), grid)
    xs = np.array([x for x, _ in rows])
    p = np.array([fs.p_tot for _, fs in rows])
    total = trapezoid(p, xs)
    mean = trapezoid(xs * p, xs) / total
    var = trapezoid((xs - mean) ** 2 * p, xs) / total
    assert_allclose(var, sigma_t(P, slit, 2.0) ** 2, rtol=1e-6)


def test_grid_empty_mask_is_dark():
    grid = GridSpec(-5.0, 5.0, 11, 1.0)
    rows = field_grid(P, SYMMETRIC, SlitMask([]), grid)
    assert len(rows) == 11
    assert all(fs.p_tot == 0.0 and fs.nodal for _, fs in rows)
    assert all(np.isnan(fs.v_tot) for _, fs in rows)


def test_peak_bound_dominates_grid():
    grid = GridSpec(-15.0, 15.0, 2001, 2.0)
    bound = peak_bound(P, SYMMETRIC, SlitMask.all_open(2), grid.t)
    rows = field_grid(P, SYMMETRIC, SlitMask.all_open(2), grid)
    peak = max(fs.p_tot for _, fs in rows)
    assert peak <= bound
    # the bound is attained for a single centered packet
    single = peak_bound(P, [SlitSpec(center=0.0)], SlitMask([0]), 2.0)
    ev = eval_packet(P, SlitSpec(center=0.0), 0.0, 2.0)
    assert float(ev.amplitude**2) == pytest.approx(single, rel=1e-14)


def test_open_evals_respects_mask_order():
    slits = [SlitSpec(center=c) for c in (-3.0, 0.0, 3.0)]
    evals = open_evals(P, slits, SlitMask([2, 0]), np.array([0.0]), 1.0)
    assert len(evals) == 2
    # mask indices are applied in sorted order
    ev_first = eval_packet(P, slits[0], np.array([0.0]), 1.0)
    assert np.array_equal(evals[0].amplitude, ev_first.amplitude)
