"""Numerical core: constitutive curves, mesh, assembly, linearisation and estimators."""
