"""Levelized-cost arithmetic and a multi-carrier capacity-expansion LP with an
embedded simplex solver, used to study the cost-efficient share of nuclear
power."""

__version__ = "0.1.0"
