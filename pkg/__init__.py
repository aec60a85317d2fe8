"""
fermilab-nrc - Norm-Resolvent Convergence lab
Zero-range limits of fermionic N-body Schrödinger operators on periodic grids
"""

__version__ = "1.0.0"
