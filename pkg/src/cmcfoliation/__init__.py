"""Constant-mean-curvature foliations: Reeb-type components and the flat 2-torus model."""
__version__ = "0.1.0"
