"""Test package for peclet-lab."""
