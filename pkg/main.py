#!/usr/bin/env python3
"""
pvweights - optimal p-value weights under Gaussian priors.
Main entry point for CLI usage; see interface/cli.py for the commands.
"""

import sys

from interface.cli import main

if __name__ == "__main__":
    sys.exit(main())
