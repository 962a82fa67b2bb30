"""API-key authentication for the results service.

A pure ASGI middleware: /health is answered at the ASGI layer before any
framework processing, every other non-public path needs the key in the
`x-api-key` header or the `key` query parameter.
"""

import hmac
import json
import logging
from urllib.parse import parse_qs

from app.config import DASHBOARD_API_KEY

logger = logging.getLogger(__name__)

PUBLIC_PATHS = {"/health", "/favicon.ico"}

_HEALTH_BODY = b'{"status":"ok"}'
_DENIED_BODY = json.dumps({"detail": "missing or invalid API key"}).encode()


def _check_api_key(headers: dict, query_string: str, expected: str) -> bool:
    params = parse_qs(query_string)
    key_from_header = headers.get(b"x-api-key", b"").decode()
    key_from_query = params.get("key", [""])[0]
    api_key = key_from_header or key_from_query
    return bool(api_key) and hmac.compare_digest(api_key, expected)


async def _send_json(send, status: int, body: bytes) -> None:
    await send({
        "type": "http.response.start",
        "status": status,
        "headers": [
            [b"content-type", b"application/json"],
            [b"content-length", str(len(body)).encode()],
        ],
    })
    await send({"type": "http.response.body", "body": body})


class APIKeyMiddleware:
    """Pure ASGI middleware guarding every path outside PUBLIC_PATHS."""

    def __init__(self, app, api_key: str | None = None):
        self.app = app
        self.api_key = api_key or DASHBOARD_API_KEY

    async def __call__(self, scope, receive, send):
        if scope["type"] != "http":
            await self.app(scope, receive, send)
            return

        path = scope.get("path", "")

        # ── Fast path: /health short-circuit ──────────────────────────
        if path == "/health":
            await _send_json(send, 200, _HEALTH_BODY)
            return

        if path in PUBLIC_PATHS:
            await self.app(scope, receive, send)
            return

        # ── Auth check ────────────────────────────────────────────────
        headers = dict(scope.get("headers", []))
        query_string = scope.get("query_string", b"").decode()
        if not _check_api_key(headers, query_string, self.api_key):
            logger.warning(f"Rejected unauthenticated request to {path}")
            await _send_json(send, 401, _DENIED_BODY)
            return

        await self.app(scope, receive, send)
