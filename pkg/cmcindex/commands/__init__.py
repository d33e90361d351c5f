"""
CLI subcommands
"""

from cmcindex.commands import bounds, hierarchy, nodal, pipeline, solve, spectrum, table

COMMANDS = [solve, hierarchy, spectrum, nodal, bounds, table, pipeline]

__all__ = ["COMMANDS"]
