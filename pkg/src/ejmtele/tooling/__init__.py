"""Sweeps, OpenQASM export, invariant checks and the command-line front end."""
