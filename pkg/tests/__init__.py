"""
Test package for the Hamiltonian descent toolkit.
"""
