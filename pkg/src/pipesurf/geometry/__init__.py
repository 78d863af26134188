"""Centerlines, cross-sections, the pipe map and its metric."""
from .curves import (CURVE_KINDS, Centerline, Frame, FrameScalars, catalog_centerline,
                     centerline_from_expressions, custom_centerline, frenet_frame)
from .sections import SECTION_KINDS, CrossSection, catalog_cross_section
from .pipe import (BOUNDARY_MODES, CheckResult, MetricData, PipeGeometry, ValidityReport,
                   metric_tensors, surface_point, validate_geometry)
from .mesh import export_mesh, mesh_nodes, write_bytes

__all__ = [
    "CURVE_KINDS", "Centerline", "Frame", "FrameScalars", "catalog_centerline",
    "centerline_from_expressions", "custom_centerline", "frenet_frame",
    "SECTION_KINDS", "CrossSection", "catalog_cross_section",
    "BOUNDARY_MODES", "CheckResult", "MetricData", "PipeGeometry", "ValidityReport",
    "metric_tensors", "surface_point", "validate_geometry",
    "export_mesh", "mesh_nodes", "write_bytes",
]
