"""Projections of discrete measures onto stochastic-order cones.

Results of projections and order checks are returned as plain dictionaries
decoded from the library's JSON output.
"""

import json

import numpy as np

from ._core import (
    Grid,
    InvalidArgument,
    Measure,
    SolverError,
    check_order_json,
    project_json,
    suite_csv,
    transform,
    w2_squared,
)

__all__ = [
    "Grid",
    "InvalidArgument",
    "Measure",
    "SolverError",
    "check_order",
    "measure",
    "project",
    "suite_csv",
    "transform",
    "w2_squared",
]


def measure(points, weights=None):
    """Build a measure from an (n, d) or (n,) array of atoms; uniform weights by default."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if weights is None:
        weights = np.full(len(pts), 1.0 / len(pts))
    return Measure(pts, np.asarray(weights, dtype=float).tolist())


def project(mu, nu, direction="backward", order="convex", grid=None, canonical=False):
    return json.loads(project_json(mu, nu, direction, order, grid, canonical))


def check_order(mu, nu, kind="convex", grid=None):
    return json.loads(check_order_json(mu, nu, kind, grid))
