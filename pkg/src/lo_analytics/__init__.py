"""Learning-objective analytics for online-course telemetry."""

__version__ = "0.1.0"
