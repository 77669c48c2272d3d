"""Monte Carlo BER and synchronization experiments."""
