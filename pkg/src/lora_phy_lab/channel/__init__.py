"""Impairment injection: complex gain, CFO, integer and fractional STO, AWGN."""
