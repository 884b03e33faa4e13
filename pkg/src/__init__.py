"""
Parametric LANDO: kernel-learned dynamics per parameter instance, mapped to
states at a queried time by POD and a small neural network.
"""
__version__ = "1.0.0"
