"""Entry point for running as a module: python -m relaxfree"""

import sys

from relaxfree.cli import main

if __name__ == "__main__":
    sys.exit(main())
