"""Arbiter-free prediction markets on colored coins: ledger, share pricing and an order book simulator."""
from . import cfd, glove, ledger

__version__ = "0.1.0"
