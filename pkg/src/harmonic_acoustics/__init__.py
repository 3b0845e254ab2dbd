"""Multiharmonic effective models for nonlinear viscous acoustics in an annulus."""
__version__ = "0.1.0"
