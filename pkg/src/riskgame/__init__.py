"""Risk-averse and risk-revising equilibria of finite games with a common prior."""

__version__ = "0.1.0"
