"""Renders exported JSON/CSV artifacts into figures.

Strictly downstream of the frozen file formats: every number shown is
read from disk, nothing is recomputed here.
"""

from .schema import (
    SUPPORTED_SCHEMA_VERSION,
    FlowDoc,
    Histogram,
    Profile,
    SchemaError,
    SchemaMismatchError,
    load_flowgraph,
    read_histogram,
    read_profile,
)
from .render import RenderStyle, render_flow, render_histograms, render_profiles

__all__ = [
    "SUPPORTED_SCHEMA_VERSION",
    "FlowDoc",
    "Histogram",
    "Profile",
    "SchemaError",
    "SchemaMismatchError",
    "load_flowgraph",
    "read_histogram",
    "read_profile",
    "RenderStyle",
    "render_flow",
    "render_histograms",
    "render_profiles",
]
