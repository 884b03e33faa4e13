"""Offline/online stages of the parametric surrogate."""
