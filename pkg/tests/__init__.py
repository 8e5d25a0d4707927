"""Tests for PulseArea."""
