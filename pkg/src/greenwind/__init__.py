"""Winding numbers of planar Brownian loops, regularized winding integrals
and the Cauchy-limit statistics of Poisson impurity phase sums."""

from .paths import (Path, ClosedPolyline, DyadicDecomposition, sample_bm,
                    sample_bridge, close_path, dyadic_decompose, replica_rng)
from .winding import (Grid, WindingField, LevelMeasures, OnCurveError,
                      winding_number, winding_numbers, winding_field,
                      level_measures, truncated_winding_integral,
                      regularized_winding_integral, joint_tail_area)
from .forms import (OneForm, WeightFn, area_form, bump_form, trig_form,
                    const_weight, bump_weight, trig_weight, ramp_weight,
                    curl_weight, product_weight, make_form, make_weight,
                    line_integral_exact, stratonovich_approx, green_residual,
                    GreenReport)
from .cauchy import (CauchyParams, CauchyProcessPath, sample_cauchy,
                     cauchy_cf, fit_cauchy, truncated_mean_position,
                     sample_cauchy_process, young_integral)
from .impurities import (ImpurityExperiment, ImpuritySample, CellValues,
                         sample_impurities, weighted_winding_sum, xi_samples,
                         xi_samples_multi, empirical_cf, level_cells, campbell_exponent,
                         campbell_cf, psi_tail, campbell_tail,
                         path_time_integral, limit_cf, xi_limit_samples)

__version__ = "0.1.0"
