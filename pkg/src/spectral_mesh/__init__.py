"""Multiparameter perturbation of multiple eigenvalues of non-self-adjoint
boundary eigenvalue problems, with closed-form model problems and a
collocation oracle for verification."""

__version__ = "0.1.0"
