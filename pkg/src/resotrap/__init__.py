"""Eigenvalue trajectories, resonance trapping and collectivity for
non-Hermitian Hamiltonians with a single rank-one decay channel."""

__version__ = "0.1.0"
