"""Differentially private convex optimization by output perturbation."""
