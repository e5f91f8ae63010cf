"""Simulator (lib.quantum) and blind-computation protocols (lib.bqc)."""
