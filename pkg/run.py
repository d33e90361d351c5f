#!/usr/bin/env python3
"""
Entry point for running the cmcindex command line
"""

import sys

from cmcindex.main import main


if __name__ == "__main__":
    sys.exit(main())
