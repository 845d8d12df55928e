"""Entry point for the HydroSwitch command line."""
from __future__ import annotations

import sys

from hydroswitch.cli.app import main


if __name__ == "__main__":
    sys.exit(main())
