"""Integration tests for CW-CLI."""