"""Desk-scale numerics for the derivation of the cubic NLS from Bose many-body dynamics."""

__version__ = "0.1.0"
