from __future__ import annotations


class LoraPhyError(Exception):
    """Base exception for modem errors."""


class ConfigurationError(LoraPhyError, ValueError):
    """Invalid parameters, shapes or lengths."""


class FrameError(LoraPhyError):
    """Frame assembly or payload recovery failed."""


class SyncFailure(LoraPhyError):
    """A synchronization stage could not complete."""

    def __init__(self, stage: str, message: str) -> None:
        super().__init__(f"{stage}: {message}")
        self.stage = stage


class CaptureError(LoraPhyError, OSError):
    """Malformed IQ capture or sidecar."""


__all__ = [
    "LoraPhyError",
    "ConfigurationError",
    "FrameError",
    "SyncFailure",
    "CaptureError",
]
