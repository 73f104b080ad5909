"""Randomized-measurement toolkit for two-qubit local-unitary invariants.

Haar-random local unitaries and shot counts in, unbiased invariant estimates
and certified CHSH / teleportation-fidelity bounds out.
"""
__version__ = "0.1.0"

from ._accel import backend
from .bounds import ConfidenceInterval, CertifiedBound, scan_certify
from .invariants import InvariantSet, SingularTriple, compute_all, singular_triple
from .states import BlochTwoQubit, TwoQubitState, bloch_compose, bloch_decompose

__all__ = [
    "BlochTwoQubit",
    "CertifiedBound",
    "ConfidenceInterval",
    "InvariantSet",
    "SingularTriple",
    "TwoQubitState",
    "backend",
    "bloch_compose",
    "bloch_decompose",
    "compute_all",
    "scan_certify",
    "singular_triple",
]
