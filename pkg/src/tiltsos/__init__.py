"""Tilted solid-on-solid surfaces and lozenge tilings on the torus."""

__version__ = "0.1.0"
