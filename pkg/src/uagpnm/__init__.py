"""Bounded-simulation node matching over dynamic graphs."""
