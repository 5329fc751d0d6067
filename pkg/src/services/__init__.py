"""Registration, flattening, pRF and evaluation services."""
