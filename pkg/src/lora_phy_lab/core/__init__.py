"""Chirp symbol generation, dechirping and DFT demodulation."""
