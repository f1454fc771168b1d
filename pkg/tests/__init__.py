"""Tests for qrlab."""
