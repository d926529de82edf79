"""Trimmed spline wave simulations with lumped and stabilized mass matrices."""
