"""stegosim: steganographic-channel capacity models and restricted-flooding
overlay simulation on social graphs with per-node image-upload schedules."""

__version__ = "0.1.0"
