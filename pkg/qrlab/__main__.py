"""Allows `python -m qrlab`."""
import sys

from qrlab.cli import run


sys.exit(run())
