"""Context effects on third-party punishment: game, choice models, simulation, tests."""

__version__ = "0.1.0"
