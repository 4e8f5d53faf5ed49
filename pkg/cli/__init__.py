"""embedtrack command-line interface."""
