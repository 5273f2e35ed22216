"""
feederctl - Hierarchical multi-area feedback optimization simulator for distribution feeders.
"""

__version__ = "0.1.0"
