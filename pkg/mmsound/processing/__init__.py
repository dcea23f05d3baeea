"""Signal processing and statistical modeling stages."""
