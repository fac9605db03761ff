"""Monitoring and experience-sharing platform for project-based learning."""

__version__ = "0.1.0"
