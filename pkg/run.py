#!/usr/bin/env python3
"""
Startup script for gadgetgrade.
Runs the command line from a source checkout: `python run.py analyze dump.txt`.
"""

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

from app.cli import main  # noqa: E402

if __name__ == "__main__":
    raise SystemExit(main())
