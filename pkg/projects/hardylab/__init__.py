"""
hardylab: matrix-weighted variable-exponent Hardy spaces on uniform grids
"""

__version__ = "0.1.0"
