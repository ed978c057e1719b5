"""linetwin: generate and operate a digital twin of a production line from an AutomationML model."""

__version__ = "0.1.0"
