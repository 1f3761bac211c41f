"""Lie symmetry toolkit for variable-coefficient K(m,n) equations."""
