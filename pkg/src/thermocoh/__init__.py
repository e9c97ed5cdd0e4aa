"""Thermally induced qubit coherence in a qubit coupled to a mechanical oscillator."""

__version__ = "0.1.0"
