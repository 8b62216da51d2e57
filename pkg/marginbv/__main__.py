"""
Run the CLI as a module.

Usage:
    python -m marginbv verify --loss logistic
"""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
