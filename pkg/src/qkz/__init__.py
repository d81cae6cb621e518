"""Integral solutions of the level-0 qKZ equation for the trigonometric sl_n R-matrix."""

from __future__ import annotations

__version__ = "0.1.0"

CONVENTIONS = {"exponent": "real", "measure": "dgamma"}
