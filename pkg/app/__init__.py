"""
matrix-hardy-kit - Schur analysis with a matrix variable
"""
__version__ = "0.1.0"
