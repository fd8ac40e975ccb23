"""Numerical laboratory for localized fractional Sobolev-Poincare inequalities
on irregular planar domains."""

from __future__ import annotations

__version__ = "0.1.0"
