"""Pooling-problem relaxations and valid inequalities."""
