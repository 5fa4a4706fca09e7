"""Tests for CW-CLI."""