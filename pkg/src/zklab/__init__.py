"""Numerical laboratory for perturbations of Zakharov-Kuznetsov backgrounds on the 2-torus."""

__version__ = "0.1.0"
