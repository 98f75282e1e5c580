from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import eigh_tridiagonal

from cursorwalk import walkdyn as wd
from cursorwalk.pathspec import path_length

LAM = 3 * np.pi / 8


def tridiagonal_amplitudes(t, s, lam):
    """Independent oracle: diagonalise the s x s hopping matrix directly."""
    w, v = eigh_tridiagonal(np.zeros(s), np.full(s - 1, -lam / 2))
    return v @ (np.exp(-1j * w * t) * v[0])


def test_initial_amplitudes():
    amps = wd.chain_amplitudes(0.0, 9)
    np.testing.assert_allclose(amps, np.eye(9)[0], atol=1e-15)
    assert wd.chain_amplitude(0.0, 1, 9) == pytest.approx(1.0)


def test_unitarity():
    assert np.sum(np.abs(wd.chain_amplitudes(5.0, 9)) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_against_eigensolver():
    ref = tridiagonal_amplitudes(7.3, 17, LAM)
    np.testing.assert_allclose(wd.chain_amplitudes(7.3, 17, LAM), ref, atol=1e-10)
    for j in (1, 8, 17):
        assert abs(wd.chain_amplitude(7.3, j, 17, LAM) - ref[j - 1]) < 1e-10


def test_batched_matches_single():
    t = np.array([0.0, 1.5, 40.0])
    batch = wd.chain_amplitudes(t, 33)
    assert batch.shape == (3, 33)
    for i, ti in enumerate(t):
        np.testing.assert_allclose(batch[i], wd.chain_amplitudes(ti, 33), atol=1e-14)


def test_invalid_chain():
    with pytest.raises(ValueError):
        wd.chain_amplitude(1.0, 0, 5)
    with pytest.raises(ValueError):
        wd.chain_amplitudes(1.0, 5, lam=-1.0)


def test_bessel_packet_vs_finite_chain():
    t = 40 / LAM
    exact = abs(wd.chain_amplitude(t, 10, 129)) ** 2
    assert abs(wd.bessel_packet(t, 10) - exact) < 0.01
    total = sum(wd.bessel_packet(t, x) for x in range(1, int(np.ceil(40)) + 21))
    assert 0.95 <= total <= 1.05
    assert wd.bessel_packet(t, 80) < 1e-6


def test_continuum_density():
    t = 20.0
    a = LAM * t
    integral, _ = quad(lambda x: wd.continuum_density(t, x), 0, a, limit=200)
    assert integral == pytest.approx(1.0, abs=1e-6)
    assert wd.continuum_density(t, a / 2) == pytest.approx(2 / (np.sqrt(3) * np.pi * a), rel=1e-12)
    assert wd.continuum_density(t, 1e-9) < 1e-15
    assert wd.continuum_density(t, 2 * a) == 0.0


def test_pr_exact_chain_start():
    for mu in (1, 3, 6):
        assert wd.pr_exact_chain(0.0, mu, 129) == pytest.approx(2.0**-mu, abs=1e-15)
        assert wd.pr_closed_chain(0.0, mu) == pytest.approx(0.0, abs=1e-15)


def test_pr_exact_chain_peak():
    t0, _ = wd.first_peak(6)
    _, peak = wd.locate_max(lambda t: wd.pr_exact_chain(t, 6, 129), 0.5 * t0, 1.5 * t0, 0.05)
    assert peak == pytest.approx(0.92, abs=0.02)


def test_pr_exact_subroutine_start():
    assert wd.pr_exact_subroutine(0.0, 4, 3) == pytest.approx(2.0**-4, abs=1e-15)
    assert wd.pr_closed_subroutine(0.0, 4) == pytest.approx(0.0, abs=1e-15)


def test_closed_forms_related_by_factor_four():
    t = np.linspace(0, 200, 81)
    np.testing.assert_allclose(wd.pr_closed_subroutine(t, 5), wd.pr_closed_chain(t / 4, 5), atol=1e-15)


def test_subroutine_peak_heights_agree():
    t0, closed = wd.first_peak(6, flavor="subroutine")
    _, exact = wd.locate_max(lambda t: wd.pr_exact_subroutine(t, 6, 6), 0.5 * t0, 1.5 * t0, 0.1)
    assert abs(exact - closed) < 0.03
    assert path_length(6) == 507


def test_peak_constants():
    assert wd.peak_root() == pytest.approx(3.518, abs=1e-3)
    assert wd.peak_value() == pytest.approx(0.92, abs=0.01)
    t0, pr0 = wd.first_peak(6, LAM, "chain")
    assert t0 == pytest.approx(wd.peak_root() / (2 * LAM * np.arcsin(1 / 8)), rel=1e-12)
    assert t0 == pytest.approx(11.9, abs=0.05)
    with pytest.raises(ValueError):
        wd.first_peak(6, LAM, "bogus")


def test_bessel_j():
    assert wd.bessel_j(0, 0.0) == 1.0
    assert wd.bessel_j(3, 0.0) == 0.0
    assert wd.bessel_j(1, 1.0) == pytest.approx(0.4400505857, abs=1e-10)
    with pytest.raises(ValueError):
        wd.bessel_j(-2, 1.0)


def test_completion_peak():
    assert wd.completion_peak(2) == pytest.approx(1.0, abs=1e-9)
    vals = [wd.completion_peak(T) for T in (4, 6, 8, 10, 12)]
    assert all(v < 1 for v in vals)
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        wd.completion_peak(1)


def test_series_wrapper():
    t = wd.time_grid(0, 10, 0.5)
    assert len(t) == 21 and t[-1] == 10.0
    series = wd.pr_series("exact_chain", t, 3, s=17)
    assert series.values.shape == t.shape
    with pytest.raises(ValueError):
        wd.pr_series("nope", t, 3)
    with pytest.raises(ValueError):
        wd.PrSeries(t[:1], np.array([1.5]), "bad")
