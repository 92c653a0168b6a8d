"""Deck recommendation workbench: a mini card-game simulator, a Q-learning
deck-search policy and the baselines it is compared against."""

__version__ = "0.1.0"
