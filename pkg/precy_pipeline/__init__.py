"""
precy_pipeline: точная арифметика для pre-Calabi-Yau структур.

Path dg categories of simplicial complexes, Hochschild and negative cyclic
chains, tube quivers and the noncommutative Legendre transform.
"""

__version__ = "0.1.0"
