"""Pluggable text-generation provider contract.

The pipelines only depend on `complete(request) -> response`; the HTTP
implementation talks to a chat-completion endpoint configured by base URL,
model name and an API key environment variable, while the scripted provider
replays canned responses from a file for fully offline, deterministic runs.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field

import requests

DEFAULT_API_KEY_ENV = "HDLFORGE_PROVIDER_API_KEY"
MAX_ATTEMPTS = 3
BACKOFF_BASE_S = 1.0


class ProviderError(RuntimeError):
    """The provider failed to return usable text."""


@dataclass(frozen=True)
class ProviderRequest:
    system: str
    user: str
    temperature: float = 0.0
    max_tokens: int = 2048
    request_id: str | None = None


@dataclass(frozen=True)
class ProviderResponse:
    text: str
    finish_reason: str = "stop"


class HttpChatProvider:
    """Chat-completion HTTP client with bounded exponential backoff."""

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        timeout_s: float = 120.0,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s
        self.session = session or requests.Session()

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        api_key = os.environ.get(self.api_key_env, "")
        if not api_key:
            raise ProviderError(
                f"no API key in environment variable {self.api_key_env}"
            )
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Authorization": f"Bearer {api_key}"}
        if request.request_id:
            headers["X-Request-Id"] = request.request_id
        last_error: Exception | None = None
        for attempt in range(MAX_ATTEMPTS):
            try:
                response = self.session.post(
                    f"{self.base_url}/chat/completions",
                    json=payload,
                    headers=headers,
                    timeout=self.timeout_s,
                )
                if response.status_code in (429, 500, 502, 503, 504):
                    raise ProviderError(f"retryable status {response.status_code}")
                response.raise_for_status()
                body = response.json()
                choice = body["choices"][0]
                return ProviderResponse(
                    text=choice["message"]["content"],
                    finish_reason=choice.get("finish_reason", "stop"),
                )
            except (requests.RequestException, ProviderError, KeyError) as exc:
                last_error = exc
                if attempt + 1 < MAX_ATTEMPTS:
                    time.sleep(BACKOFF_BASE_S * (2**attempt))
        raise ProviderError(f"provider failed after {MAX_ATTEMPTS} attempts: {last_error}")


@dataclass
class ScriptedProvider:
    """Deterministic mock: first rule whose pattern matches the user text wins.

    Rules come from a JSONL script file of
    {"match": "<regex or substring>", "respond": "<text>"} entries; a rule
    without "match" is a catch-all, and {"fail": true} simulates a provider
    outage for matching requests. All requests are recorded for audits.
    """

    rules: list[dict] = field(default_factory=list)
    requests_seen: list[ProviderRequest] = field(default_factory=list)

    @classmethod
    def from_file(cls, path: str) -> "ScriptedProvider":
        rules = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rules.append(json.loads(line))
        return cls(rules=rules)

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        self.requests_seen.append(request)
        for rule in self.rules:
            pattern = rule.get("match")
            if pattern is None or re.search(pattern, request.user, re.DOTALL):
                if rule.get("fail"):
                    raise ProviderError(rule.get("error", "scripted failure"))
                return ProviderResponse(text=rule["respond"])
        raise ProviderError("no scripted rule matched the request")
