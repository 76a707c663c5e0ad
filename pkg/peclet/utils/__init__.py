"""Utility modules for peclet-lab."""
