import dataclasses
import math

import numpy as np
import pytest

from lambda_knob.model import PB_GAMMA, RB_GAMMA, DriveFields, NumericalError
from lambda_knob.response import (DopplerSpec, chi_norm, doppler_susceptibility,
                                  group_index, knob_scan, probe_beat, susceptibility)

GAMMA = RB_GAMMA


def test_eit_null(rb):
    chi = chi_norm(rb, DriveFields(G=10 * GAMMA), 0.0)
    assert abs(chi[0]) <= 1e-10


def test_fig1b_structure(rb, fig1_drives):
    chi = chi_norm(rb, fig1_drives, np.array([-0.3, 0.0, 0.3]) * GAMMA)
    assert abs(chi[1].imag) <= 1e-10
    assert chi[0].imag < 0 and chi[2].imag < 0
    assert chi[2].real < chi[0].real


def test_chi_phys_is_eta_times_chi_norm(rb, fig1_drives):
    s = susceptibility(rb, fig1_drives, np.linspace(-5, 5, 41) * GAMMA)
    np.testing.assert_array_equal(s.chi_phys, rb.eta * s.chi_norm)


def test_five_point_stencil_agreement(rb, fig1_drives):
    h = 1e-3 * GAMMA
    res = group_index(rb, fig1_drives, 0.0)
    d = np.array([-2, -1, 1, 2]) * h
    c = rb.eta * chi_norm(rb, fig1_drives, d).real
    five = (c[0] - 8 * c[1] + 8 * c[2] - c[3]) / (12 * h)
    assert res.dchi_dDelta1.real == pytest.approx(five, rel=1e-4)
    assert res.converged


def test_ng_fig1_value(rb, fig1_drives):
    res = group_index(rb, fig1_drives)
    assert res.n_g == pytest.approx(-2.19e4, rel=0.2)


def test_ng_linear_in_eta(rb, fig1_drives):
    a = group_index(rb, fig1_drives).n_g
    b = group_index(dataclasses.replace(rb, prefactor_eta=2 * rb.eta), fig1_drives).n_g
    assert b - 1 == pytest.approx(2 * (a - 1), rel=1e-12)


def test_ng_vacuum(rb, fig1_drives):
    assert group_index(dataclasses.replace(rb, prefactor_eta=0.0), fig1_drives).n_g == 1.0


def test_ng_subluminal_without_ll(rb):
    assert group_index(rb, DriveFields(G=10 * GAMMA)).n_g > 1e3


def test_bad_step(rb, fig1_drives):
    with pytest.raises(ValueError):
        group_index(rb, fig1_drives, step=0.0)


def test_doppler_trivial_limits(rb, fig1_drives):
    d1 = np.linspace(-2, 2, 9) * GAMMA
    plain = chi_norm(rb, fig1_drives, d1)
    np.testing.assert_array_equal(chi_norm(rb, fig1_drives, d1, DopplerSpec(0.0)), plain)
    one = doppler_susceptibility(rb, fig1_drives, d1, DopplerSpec(1e9, nodes=1))
    np.testing.assert_allclose(one.chi_norm, plain, rtol=1e-14, atol=1e-17)


def test_doppler_spec_validation():
    with pytest.raises(ValueError):
        DopplerSpec(-1.0)
    with pytest.raises(ValueError):
        DopplerSpec(1.0, nodes=0)
    xs, ws = DopplerSpec(2.0, nodes=32).rule()
    assert ws.sum() == pytest.approx(1.0, rel=1e-14)
    assert np.sum(ws * xs**2) == pytest.approx(4.0, rel=1e-12)


def test_doppler_preserves_delta4():
    drives = DriveFields(G=1.0, Omega=1.0, Delta2=0.3, Delta3=0.2)
    d1 = np.array([0.5, 1.0])
    for x in (-3.0, 0.0, 7.0):
        shifted = drives.doppler_shifted(x)
        np.testing.assert_allclose(probe_beat(shifted, d1 - x), probe_beat(drives, d1),
                                   atol=1e-14)
        assert shifted.Delta3 == drives.Delta3


def test_doppler_node_convergence(rb):
    drives = DriveFields(G=200 * GAMMA, Omega=100 * GAMMA)
    d1 = np.array([-1e-3, 0.0, 1e-3]) * GAMMA
    a = chi_norm(rb, drives, d1, DopplerSpec(1.33e9, 64))
    b = chi_norm(rb, drives, d1, DopplerSpec(1.33e9, 128))
    assert np.abs(a - b).max() <= 1e-6 * np.abs(b).max()
    na = group_index(rb, drives, doppler=DopplerSpec(1.33e9, 64)).n_g
    nb = group_index(rb, drives, doppler=DopplerSpec(1.33e9, 128)).n_g
    assert abs(na - nb) <= 1e-6 * abs(nb)


def test_doppler_error_names_velocity_class(rb):
    # G = 0 makes every class degenerate.
    with pytest.raises(NumericalError, match="velocity class x="):
        chi_norm(rb, DriveFields(G=0.0, Omega=5 * GAMMA), 0.0, DopplerSpec(1e8, 4))


def test_knob_sign_pattern(rb, fig1_drives):
    grid = np.linspace(0, 20, 41) * GAMMA
    scan = knob_scan(rb, fig1_drives, grid)
    signs = np.sign(scan.ng_values)
    changes = [s for a, s in zip(signs, signs[1:]) if s != a]
    assert signs[0] > 0 and changes == [-1, 1]
    assert len(scan.crossovers) == 2
    for lo, hi in scan.crossovers:
        assert hi - lo <= 1e-3 * GAMMA
        assert group_index(rb, fig1_drives.with_omega(lo)).n_g * \
            group_index(rb, fig1_drives.with_omega(hi)).n_g < 0


def test_knob_parallel_matches_serial(rb, fig1_drives):
    grid = np.linspace(0, 20, 21) * GAMMA
    a = knob_scan(rb, fig1_drives, grid, workers=1)
    b = knob_scan(rb, fig1_drives, grid, workers=4)
    np.testing.assert_array_equal(a.ng_values, b.ng_values)
    assert a.crossovers == b.crossovers


def test_knob_single_point(rb, fig1_drives):
    scan = knob_scan(rb, fig1_drives, [5 * GAMMA])
    assert scan.ng_values[0] == group_index(rb, fig1_drives).n_g
    assert scan.crossovers == []


def test_knob_skips_degenerate(rb):
    # With G = 0 the |2>,|3> block is closed at any Ω, so both points are degenerate.
    scan = knob_scan(rb, DriveFields(G=0.0), [0.0, 1 * GAMMA])
    assert np.isnan(scan.ng_values).all()
    assert scan.skipped == [0.0, 1 * GAMMA]
    assert scan.crossovers == []


def test_knob_grid_validation(rb, fig1_drives):
    with pytest.raises(ValueError):
        knob_scan(rb, fig1_drives, [2.0, 1.0])
    with pytest.raises(ValueError):
        knob_scan(rb, fig1_drives, [])


@pytest.mark.slow
def test_rb_doppler_strongest_where_negative(rb):
    drives = DriveFields(G=200 * GAMMA)
    grid = np.linspace(0, 300, 61) * GAMMA
    plain = knob_scan(rb, drives, grid).ng_values
    dop = knob_scan(rb, drives, grid, DopplerSpec(1.33e9)).ng_values
    diff = np.abs(dop - plain)
    neg = plain < 0
    assert neg.any() and (~neg).any()
    assert (diff[neg] / np.abs(plain[neg])).max() > 0.1
    # Relative change is ill-conditioned at the crossovers, so compare absolute change.
    assert diff[neg].max() > diff[~neg].max()


@pytest.mark.slow
def test_pb_doppler_insensitive(pb):
    drives = DriveFields(G=297 * PB_GAMMA)
    grid = np.linspace(0, 500, 101) * PB_GAMMA
    plain = knob_scan(pb, drives, grid)
    dop = knob_scan(pb, drives, grid, DopplerSpec(25 * PB_GAMMA))
    assert not plain.skipped and not dop.skipped
    rel = np.abs(dop.ng_values - plain.ng_values) / np.abs(plain.ng_values)
    assert rel.max() <= 0.1
