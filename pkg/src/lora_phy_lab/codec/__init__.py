"""Bit-level transmit/receive processing: whitening, Hamming ECC, interleaving, Gray mapping."""
