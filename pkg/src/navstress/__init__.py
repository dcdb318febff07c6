"""navstress - search-based simulation testing for robot navigation."""

__version__ = "0.3.0"
