"""Experiment command implementations."""
