"""Software LoRa PHY modem, channel simulator and synchronizing receiver."""

__version__ = "0.1.0"

__all__ = ["__version__"]
