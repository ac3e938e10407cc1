"""Unbalanced AC network modelling, power flow, optimal power flow, and
discrete-event grid simulation."""

__version__ = "0.1.0"
