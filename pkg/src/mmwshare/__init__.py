"""Multi-operator mmWave sharing simulator and network-goods economics."""

__version__ = "0.1.0"
