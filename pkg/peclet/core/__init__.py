"""Numerical core of peclet-lab."""
