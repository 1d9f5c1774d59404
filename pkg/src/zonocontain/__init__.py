"""Zonotope containment package."""
