"""Integrated unit commitment and investment planning for district heating systems."""
__version__ = "0.1.0"
