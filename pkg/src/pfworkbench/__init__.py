"""Exact and numeric workbench for inhomogeneous Picard-Fuchs equations."""
