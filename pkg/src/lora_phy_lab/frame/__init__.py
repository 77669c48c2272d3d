"""LoRa packet assembly and payload recovery."""
