"""Batch scripts for feederctl."""
