"""Shared helpers for files and logs."""
