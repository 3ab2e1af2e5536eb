"""Research-paper user modeling: hybrid topic extraction plus sequential next-topic prediction."""

__version__ = "0.1.0"
