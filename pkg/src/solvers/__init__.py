"""Derivative oracles, line search and the optimizers built on them."""
