"""mtd_cli: joint moving target defense and sensor allocation."""

__version__ = "0.1.0"
