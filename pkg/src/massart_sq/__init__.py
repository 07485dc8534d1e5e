"""Hard Massart-noise instances and statistical-query experiments."""
