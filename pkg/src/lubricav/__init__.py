"""Mass-conserving cavitation in thin lubricant films.

Mixed finite elements (RT0-P0, optionally P2-P1 with lumped mass), a
characteristics time discretisation and a primal-dual active-set solver
for the resulting complementarity saddle-point systems.
"""
__version__ = "0.1.0"
