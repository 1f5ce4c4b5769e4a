"""Kernel decay of 2D multipliers built from polynomial factor powers.

A multiplier alpha * chi_E * prod |f_i|^gamma_i near the origin determines a
convolution kernel K(t,u).  This package resolves the factor singularities
into monomial charts (Newton polygon / fractional power series), measures the
disk and strip mass growth laws, predicts the kernel decay envelopes the mass
laws imply, evaluates K by oscillatory quadrature, and verifies the
predictions.
"""

from .funcspec import (BumpAmplitude, ConstantAmplitude, CurveSpec, Direction,
                       DiskRegion, ExponentPair, Factor, IntegrabilityResult,
                       MultiplierSpec, Overall, ProductBumpAmplitude, Ray,
                       RegionE, SectorRegion, SectorsRegion, SpecError, Strip,
                       integrability_check, parse_spec, serialize_spec)
from .poly import BivariatePoly, PolyError, parse_poly
from .series import FractionalSeries, SeriesError
from .newton import (GridSpec, IntegrationColumn, MonomialCertificate,
                     NewtonPolygon, Resolution, ResolutionError, Sliver,
                     leading_form, monomialize_check, newton_polygon,
                     puiseux_branches, resolve_spec, root_directions,
                     sliver_decomposition)
from .measure import (FitResult, closed_form_mass_law, directional_exponent,
                      disk_mass, disk_mass_detailed, fit_exponents, g_eval,
                      mass_exponent, sliver_mass_law, strip_mass)
from .oscillate import (AmplitudeInfo, DecayInconclusive, KernelSample,
                        decay_fit, kernel_eval, vdc_reference)
from .bounds import (DecayEstimate, VerifyReport, direction_scan,
                     holder_estimate, predicted_estimate, sharpness_probe,
                     verify_bounds)

__version__ = "0.1.0"
