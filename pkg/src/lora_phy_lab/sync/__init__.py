"""Receiver synchronization: detection, offset estimation and compensation."""
