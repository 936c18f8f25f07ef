"""Index iteration toolkit for closed characteristics on convex hypersurfaces."""

__version__ = "0.1.0"
