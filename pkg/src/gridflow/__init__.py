"""Steady-state power system analysis toolkit."""
