"""Client used by the CLI to reach the service.

Given a server URL it speaks plain HTTP. Without one it mounts the ASGI
app in-process, so every CLI invocation still exercises the full request
and response models without a running daemon.
"""

from __future__ import annotations

import asyncio
from typing import Any

import httpx


class ServiceError(RuntimeError):
    """Non-2xx response from the service."""

    def __init__(self, status_code: int, detail: Any):
        self.status_code = status_code
        self.detail = detail
        code = detail.get("code") if isinstance(detail, dict) else None
        self.code = code or ("schema_mismatch" if status_code == 422 else "error")
        super().__init__(f"service returned {status_code}: {detail!r}")


class ServiceClient:
    def __init__(self, server: str | None = None, timeout: float = 600.0):
        self.server = server
        self.timeout = timeout
        self._app = None
        if server is None:
            from .service import create_app
            self._app = create_app()

    def post(self, path: str, payload: dict) -> dict:
        if self.server is not None:
            with httpx.Client(base_url=self.server, timeout=self.timeout) as client:
                response = client.post(path, json=payload)
            return self._handle(response)
        return asyncio.run(self._post_in_process(path, payload))

    async def _post_in_process(self, path: str, payload: dict) -> dict:
        transport = httpx.ASGITransport(app=self._app)
        async with httpx.AsyncClient(transport=transport, base_url="http://paperrec",
                                     timeout=self.timeout) as client:
            response = await client.post(path, json=payload)
        return self._handle(response)

    @staticmethod
    def _handle(response: httpx.Response) -> dict:
        body = response.json()
        if response.status_code >= 400:
            raise ServiceError(response.status_code, body.get("detail", body))
        return body
