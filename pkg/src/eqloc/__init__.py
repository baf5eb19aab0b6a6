"""Exact equivariant localization toolkit for toric and spherical varieties."""

from __future__ import annotations

__version__ = "0.1.0"
