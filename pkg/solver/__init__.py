"""
Numerical modules: lattice operators, pair potentials, two-body and N-body resolvents,
inequality verifiers
"""
