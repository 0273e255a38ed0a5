"""Restricted envy-free pricing for markets with size-interchangeable bidders."""

from .market import Market, MetricsRecord, Outcome

__version__ = "0.1.0"

__all__ = ["Market", "MetricsRecord", "Outcome"]
