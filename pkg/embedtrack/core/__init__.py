"""Core services: geometry, assignment, losses, sampling, tracking, metrics and simulation."""
