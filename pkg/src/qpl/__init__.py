"""QCNN phase classification from symmetric-noise synthetic data."""
