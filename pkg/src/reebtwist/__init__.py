"""Reeb dynamics on the three-sphere: Conley-Zehnder indices, twist cones,
model contact forms, Morse-Bott perturbations and geodesic windings."""

__version__ = "0.1.0"
