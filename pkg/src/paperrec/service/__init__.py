"""HTTP service layer wrapping the core pipeline."""

from .app import app, create_app

__all__ = ["app", "create_app"]
