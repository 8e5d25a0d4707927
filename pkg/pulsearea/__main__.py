"""Allow running pulsearea as a module: python -m pulsearea."""

import sys

from pulsearea.cli import main

if __name__ == "__main__":
    sys.exit(main())
