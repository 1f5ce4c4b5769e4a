"""Mass integrals against closed-form oracles, law fitting, invariants."""

import math

import numpy as np
import pytest

from oscdecay2d.funcspec import Direction, parse_spec
from oscdecay2d.measure import (closed_form_mass_law, directional_exponent,
                                disk_mass, disk_mass_detailed, fit_exponents,
                                g_eval, mass_exponent, strip_mass)

G_ONE = parse_spec("region { disk = 1.0 }")
G_ABSX = parse_spec('factor { poly = "x", gamma = 1.0 } region { disk = 1.0 }')
G_INVY = parse_spec('''factor { poly = "y", gamma = -1.0 }
region { sector { lower = "y = x^2", upper = "y = x", side = in } radius = 0.5 }''')
SEP = parse_spec('''factor { poly = "x", gamma = -0.8 }
factor { poly = "y", gamma = -0.8 }
region { disk = 0.75 }
amplitude { product_bump = 0.5 }''')
S112 = parse_spec('''factor { poly = "x", gamma = 0.0 }
factor { poly = "y - x^2", gamma = -0.9 }
region { sector { lower = "y = x^2", upper = "y = 2*x^2", side = in } radius = 0.5 }''')


def test_g_eval_pointwise():
    assert g_eval(G_ABSX, 0.5, 0.0) == pytest.approx(0.5)
    spec = parse_spec('''factor { poly = "y", gamma = -1.0 }
region { sector { lower = "y = x^2", upper = "y = x", side = in } radius = 0.6 }''')
    assert g_eval(spec, 0.5, 0.3) == pytest.approx(1 / 0.3)
    assert g_eval(spec, 0.5, 0.1) == 0.0  # below the parabola
    # singular set carries the infinity marker (0.25^2 is exact in binary)
    assert g_eval(S112, 0.25, 0.0625) == math.inf


def test_disk_mass_area():
    assert disk_mass(G_ONE, 0.3, 1e-6) == pytest.approx(math.pi * 0.09, rel=1e-6)


def test_disk_mass_absx():
    # polar closed form: (4/3) r^3
    assert disk_mass(G_ABSX, 0.3, 1e-6) == pytest.approx(4 / 3 * 0.027, rel=1e-6)


def test_disk_mass_log_region():
    # iterated closed form: box comparison r(1 + ln(1/r)) up to bounded factors
    r = 0.01
    val = disk_mass(G_INVY, r, 1e-6)
    box = r * (1 + math.log(1 / r))
    assert 0.3 * box < val < 3.0 * box


def test_disk_mass_monotone_in_r():
    vals = [disk_mass(G_INVY, r, 1e-6) for r in (0.01, 0.02, 0.05, 0.1)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_strip_mass_separable_oracle():
    r, c = 1e-3, 0.25
    got = strip_mass(SEP, Direction(0.0), r, c, 1e-6)
    want = (2 * r ** 0.2 / 0.2) * (2 * c ** 0.2 / 0.2)
    assert got == pytest.approx(want, rel=1e-6)


def test_strip_contains_disk():
    for r in (1e-3, 1e-2):
        sm = strip_mass(SEP, Direction(0.7), r, 0.3, 1e-6)
        dm = disk_mass(SEP, r, 1e-6)
        assert sm >= dm


def test_fit_exponents_exact_models():
    r = np.geomspace(1e-2, 1e-5, 12)
    fit = fit_exponents(list(zip(r, r ** 2)))
    assert (fit.power, fit.logpower) == (pytest.approx(2.0), 0)
    fit = fit_exponents(list(zip(r, r * np.log(1 / r))))
    assert (fit.power, fit.logpower) == (pytest.approx(1.0), 1)
    fit = fit_exponents(list(zip(r, 3 * r ** 0.4)))
    assert fit.power == pytest.approx(0.4)
    assert fit.logpower == 0
    assert fit.constant == pytest.approx(3.0)
    assert fit.residual < 1e-9


def test_fit_exponents_validation():
    r = np.geomspace(1e-2, 1e-4, 10)
    with pytest.raises(ValueError):
        fit_exponents(list(zip(r, -r)))
    with pytest.raises(ValueError):
        fit_exponents(list(zip(r[::-1], r[::-1])))
    with pytest.raises(ValueError):
        fit_exponents([(1e-2, 1.0)] * 4)


def test_mass_exponent_disk_one():
    fit = mass_exponent(G_ONE, tol=1e-6)
    assert fit.power == pytest.approx(2.0, abs=0.02)
    assert fit.logpower == 0
    assert fit.constant == pytest.approx(math.pi, rel=0.02)


def test_directional_exponents_separable():
    fx = directional_exponent(SEP, Direction(0.0))
    assert fx.power == pytest.approx(0.2, abs=0.03)
    assert fx.logpower == 0
    fd = directional_exponent(SEP, Direction(math.pi / 4))
    assert fd.power == pytest.approx(0.4, abs=0.03)
    assert fd.logpower == 0


def test_directional_dominated_by_mass_exponent():
    eps = mass_exponent(SEP, tol=1e-6)
    for theta in (0.0, math.pi / 4, 1.1):
        d = directional_exponent(SEP, Direction(theta))
        assert d.power <= eps.power + 0.05


def test_closed_form_mass_laws():
    law, const, tied = closed_form_mass_law(SEP)
    assert law.power == pytest.approx(0.4, abs=1e-9)
    assert law.logpower == 0
    law2, _, _ = closed_form_mass_law(G_INVY)
    assert law2.power == pytest.approx(1.0, abs=1e-9)
    assert law2.logpower == 1
    law3, _, _ = closed_form_mass_law(S112)
    assert law3.power == pytest.approx(1.2, abs=1e-9)


def test_quadrature_convergence_invariant():
    """Tightening the tolerance changes the value within the coarser bound."""
    a = disk_mass_detailed(SEP, 0.05, 1e-4)
    b = disk_mass_detailed(SEP, 0.05, 1e-8)
    assert abs(a.value - b.value) <= 2 * max(a.error, 1e-4 * abs(a.value))
