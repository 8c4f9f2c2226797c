"""Spectral-Galerkin solvers for the pseudo-relativistic Dirichlet problem on boxes."""
