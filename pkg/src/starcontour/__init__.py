"""Star-shaped contour modeling: directional length representations,
Gaussian contour models, Bayesian fitting, credible regions, and coverage
evaluation."""

from .geometry import (
    BinaryGrid,
    ContourPointSequence,
    GeometryError,
    Polygon,
    contour_to_grid,
    grid_to_contour,
    kernel_intersection,
    point_in_polygon,
    polygon_area,
    polygon_kernel,
    ray_polygon_intersections,
    symmetric_difference_area,
)
from .representation import (
    LineSet,
    MODE_EXACT,
    MODE_OVER,
    MODE_UNDER,
    StarRepresentation,
    differing_area,
    points_from_lengths,
    reconstruct,
    star_lengths,
    star_shapedness_report,
    wrap_angle,
)
from .model import (
    CredibleRegion,
    GscmParams,
    ModelError,
    ProbabilityGrid,
    angular_distance,
    credible_region,
    exp_covariance,
    gridded_probability,
    gridded_probability_from_lengths,
    sample_contours,
    sample_lengths,
)
from .fitting import (
    FitConfig,
    FitError,
    Hyperparameters,
    PosteriorSamples,
    RescaleTransform,
    find_C_and_theta,
    find_C_given_theta,
    find_theta_given_C,
    log_posterior,
    mcmc_fit,
    observed_lengths,
    posterior_predictive,
    posterior_predictive_lengths,
    rescale,
)
from .coverage import (
    CoverageReport,
    TestLineSet,
    coverage_indicator,
    coverage_report,
    interval_on_line,
)
from .shapes import AppendSpec, append_section, builtin_shape
from .experiment import (
    CrossValidationResult,
    ExperimentConfig,
    ExperimentResult,
    run_cross_validation,
    run_experiment,
)

__version__ = "0.1.0"
