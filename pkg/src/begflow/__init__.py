"""Minimizing movements of the BEG lattice model."""
