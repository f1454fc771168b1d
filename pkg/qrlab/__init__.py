"""Root `__init__` of the qrlab module."""


__version__ = "0.0.1"
