"""DeepDemand - Predict edge traffic volumes from area features and local OD regions."""

__version__ = "0.1.0"
