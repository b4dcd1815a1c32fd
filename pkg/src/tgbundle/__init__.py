"""Sasaki geometry of tangent bundles and totally geodesic vector fields."""
