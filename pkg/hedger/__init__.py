"""Deep hedging of American put options with a DDPG agent."""

__version__ = "0.1.0"
