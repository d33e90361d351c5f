"""
cmcindex - Morse index information for constant mean curvature tori
"""

__version__ = "1.0.0"
