"""Background geometries: charts, metric recipes, curvature and doubling."""

from .charts import GridChart, sphere_area
from .curvature import (
    CurvatureBundle,
    curvature,
    fd_curvature_oracle,
    generalized_eigenvalues,
    schouten_eigenvalues,
    warped_schouten_eigenvalues,
)
from .doubling import NeumannViolation, check_neumann, double, double_metric, interface_diagnostics
from .metric import DegenerateMetricError, MetricField, build_metric, warped_chart
from .recipes import MetricRecipe, WarpProfile, bump_profile

__all__ = [
    "CurvatureBundle",
    "DegenerateMetricError",
    "GridChart",
    "MetricField",
    "MetricRecipe",
    "NeumannViolation",
    "WarpProfile",
    "build_metric",
    "bump_profile",
    "check_neumann",
    "curvature",
    "double",
    "double_metric",
    "fd_curvature_oracle",
    "generalized_eigenvalues",
    "interface_diagnostics",
    "schouten_eigenvalues",
    "sphere_area",
    "warped_chart",
    "warped_schouten_eigenvalues",
]
