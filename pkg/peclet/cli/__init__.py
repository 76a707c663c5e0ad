"""CLI modules for peclet-lab."""
