"""Kernel learning, reduction and regression components."""
