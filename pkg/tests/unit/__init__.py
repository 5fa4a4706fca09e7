"""Unit tests for CW-CLI."""