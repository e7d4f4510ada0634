"""Closed-loop identification of scalar linear systems and the capacity limits on its learning rate."""
__version__ = "0.1.0"
