"""Learning pseudo-random number generators by reinforcement learning."""
__version__ = "0.1.0"
