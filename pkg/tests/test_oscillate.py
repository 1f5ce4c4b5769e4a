"""Kernel quadrature against Bessel/separable/Fresnel oracles."""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import fresnel, j1

from oscdecay2d.funcspec import Direction, Ray, Strip, parse_spec
from oscdecay2d.measure import disk_mass
from oscdecay2d.oscillate import (AmplitudeInfo, decay_fit, kernel_eval,
                                  vdc_reference)

DISK1 = parse_spec("region { disk = 1.0 }")
SEP = parse_spec('''factor { poly = "x", gamma = -0.8 }
factor { poly = "y", gamma = -0.8 }
region { disk = 0.75 }
amplitude { product_bump = 0.5 }''')


def bump1(x):
    s = np.asarray(x) ** 2 / 0.25
    return np.where(s < 1, np.exp(1.0 - 1.0 / (1.0 - np.minimum(s, 0.999999999))), 0.0)


def sep_transform_1d(t):
    """Oracle: integral |x|^-0.8 b1(x) e^{itx} dx by adaptive quadrature."""
    re = quad(lambda x: x ** -0.8 * float(bump1(x)) * math.cos(t * x),
              0, 0.5, limit=800, epsabs=1e-12)[0]
    return 2.0 * re


@pytest.mark.parametrize("t", [5.0, 10.0, 20.0, 50.0, 100.0])
def test_disk_kernel_matches_bessel(t):
    ks = kernel_eval(DISK1, t, 0.0, 1e-4)
    oracle = 2 * math.pi * j1(t) / t
    assert abs(ks.value - oracle) <= 1e-4 * (1 + abs(ks.value))


def test_kernel_zero_frequency_is_mass():
    ks = kernel_eval(DISK1, 0.0, 0.0, 1e-6)
    assert ks.value.real == pytest.approx(math.pi, rel=1e-6)
    assert abs(ks.value.imag) < 1e-12
    m = disk_mass(SEP, 0.75, 1e-6, with_amplitude=True)
    ks2 = kernel_eval(SEP, 0.0, 0.0, 1e-4)
    assert abs(ks2.value - m) <= 1e-4 * (1 + abs(m)) + ks2.est_error


def test_kernel_hermitian_symmetry():
    k1 = kernel_eval(SEP, 37.0, -12.0, 1e-4)
    k2 = kernel_eval(SEP, -37.0, 12.0, 1e-4)
    assert abs(k1.value - np.conj(k2.value)) <= 2 * (k1.est_error + k2.est_error + 1e-12)


@pytest.mark.parametrize("t,u", [(10.0, 0.0), (100.0, 50.0), (1000.0, 0.0)])
def test_sep_kernel_matches_1d_oracle(t, u):
    ks = kernel_eval(SEP, t, u, 1e-4)
    oracle = sep_transform_1d(t) * sep_transform_1d(u)
    assert abs(ks.value - oracle) <= 2e-4 * (1 + abs(oracle))
    assert abs(ks.value.imag) < 1e-3


def test_vdc_fresnel_oracle():
    """Measured Fresnel integral stays below the second-derivative bound."""
    for lam in (10.0, 100.0, 1000.0, 10000.0):
        z = math.sqrt(lam / math.pi)
        S, C = fresnel(z)
        measured = abs(math.sqrt(math.pi / lam) * complex(C, S))
        bound = vdc_reference(2, lam, (0.0, 1.0), AmplitudeInfo(1.0, 0.0))
        assert measured <= bound
        # and the bound is within its stated form c2 lam^{-1/2}
        assert bound == pytest.approx(8.0 * lam ** -0.5)


def test_vdc_linear_phase_exact():
    for lam in (10.0, 100.0):
        measured = abs((np.exp(1j * lam) - 1) / (1j * lam))
        bound = vdc_reference(1, lam, (0.0, 1.0), AmplitudeInfo(1.0, 0.0),
                              monotone=True)
        assert measured <= 2 / lam <= bound


def test_vdc_validation():
    with pytest.raises(ValueError):
        vdc_reference(1, 10.0, (0.0, 1.0), AmplitudeInfo(1.0, 0.0))
    assert vdc_reference(2, 5.0, (0, 1), AmplitudeInfo(0.0, 0.0)) == 0.0


def test_decay_fit_disk_envelope():
    fit = decay_fit(DISK1, Ray(Direction(0.3)), (1e2, 1e4), samples=40,
                    tol=1e-4)
    assert fit.power == pytest.approx(1.5, abs=0.08)


def test_decay_fit_smooth_multiplier_fast_decay():
    smooth = parse_spec("region { disk = 1.0 } amplitude { product_bump = 0.6 }")
    fit = decay_fit(smooth, Ray(Direction(0.0)), (10.0, 300.0), samples=16,
                    tol=1e-6)
    assert fit.power > 3.0


def test_decay_fit_strip_offsets():
    fit, rows = decay_fit(SEP, Strip(Direction(0.0), 2.0), (1e2, 1e3),
                          samples=8, tol=1e-4, return_rows=True)
    assert len(rows) == 8 * 5
    offs = {r.offset for r in rows}
    assert offs == {-2.0, -1.0, 0.0, 1.0, 2.0}
    assert fit.power == pytest.approx(0.2, abs=0.05)
