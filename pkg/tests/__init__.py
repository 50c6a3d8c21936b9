"""pixelpart test suite."""
