"""Source root; the installable package is `lora_phy_lab`."""
