__version__ = "0.1.20261017"
