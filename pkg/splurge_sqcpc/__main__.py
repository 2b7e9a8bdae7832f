"""Entry point for python -m splurge_sqcpc."""

from __future__ import annotations

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
