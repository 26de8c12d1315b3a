"""Uniform access to a text-completion backend.

Two backends implement the same ``complete(request)`` surface: a remote HTTP
endpoint (generic prompt-in/text-out JSON, pluggable per-provider presets,
retry with exponential backoff) and a deterministic local mock used by the
desk-scale harness. Request defaults carry the decoding configuration used
throughout: beam search with beam size 5, top-k 50, top-p 0.9, temperature 1.
"""
from __future__ import annotations

import hashlib
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

DEFAULT_API_KEY_ENV = "COMPLETION_API_KEY"


class BackendError(RuntimeError):
    """Completion could not be produced."""


class GoldMissError(BackendError):
    """A gold-replaying mock has no entry for the request."""


@dataclass
class CompletionRequest:
    prompt: str
    request_id: str | None = None
    max_new_tokens: int = 128
    temperature: float = 1.0
    top_k: int = 50
    top_p: float = 0.9
    beam_size: int = 5
    stop: tuple[str, ...] = ()


@dataclass
class CompletionResponse:
    text: str
    backend_id: str
    latency: float
    retry_count: int = 0
    dropped_params: tuple[str, ...] = ()


MOCK_MODES = ("fixed", "echo_gold", "copy_demo", "corrupt")

_CONNECTIVES = (" is parsed into: ", " is verbalized as: ")


def _unit_draw(seed: int, gold: str, position: int) -> float:
    """Deterministic uniform draw in [0, 1) per (seed, gold, token position)."""
    digest = hashlib.sha256(f"{seed}|{gold}|{position}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2 ** 64


class MockOracle:
    """Deterministic local stand-in for a completion model.

    Modes: ``fixed`` always answers one string; ``echo_gold`` replays a gold
    table keyed by request id (or prompt); ``copy_demo`` parrots the output
    half of the last demonstration in the prompt; ``corrupt`` replays gold
    with each whitespace token independently mangled with probability ``rate``.
    The per-token draws depend only on (seed, gold, position), so corruption
    sets are nested across rates.
    """

    def __init__(self, mode: str, gold=None, fixed_text: str = "",
                 rate: float = 0.0, rng_seed: int = 0):
        if mode not in MOCK_MODES:
            raise ValueError(f"unknown mock mode: {mode!r}")
        self.mode = mode
        self.gold = dict(gold or {})
        self.fixed_text = fixed_text
        self.rate = rate
        self.rng_seed = rng_seed
        self.backend_id = f"mock:{mode}"

    def _lookup_gold(self, request: CompletionRequest) -> str:
        for key in (request.request_id, request.prompt):
            if key is not None and key in self.gold:
                return self.gold[key]
        raise GoldMissError(f"no gold entry for request {request.request_id!r}")

    def _copy_demo(self, prompt: str) -> str:
        segments = prompt.split(" [SEP] ")
        if len(segments) < 2:
            return ""
        demo = segments[-2]
        for connective in _CONNECTIVES:
            pos = demo.rfind(connective)
            if pos >= 0:
                return demo[pos + len(connective):]
        return demo

    def _corrupt(self, gold: str) -> str:
        tokens = gold.split(" ")
        out = []
        for i, token in enumerate(tokens):
            if token and _unit_draw(self.rng_seed, gold, i) < self.rate:
                token = f"__{token}__"
            out.append(token)
        return " ".join(out)

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        start = time.perf_counter()
        if self.mode == "fixed":
            text = self.fixed_text
        elif self.mode == "echo_gold":
            text = self._lookup_gold(request)
        elif self.mode == "copy_demo":
            text = self._copy_demo(request.prompt)
        else:
            text = self._corrupt(self._lookup_gold(request))
        return CompletionResponse(
            text=text,
            backend_id=self.backend_id,
            latency=time.perf_counter() - start,
        )


@dataclass(frozen=True)
class EndpointPreset:
    """How to speak to one provider: which decoding parameters its API takes
    and how the payload is shaped."""
    name: str
    supported: frozenset[str] = frozenset(
        {"max_new_tokens", "temperature", "top_k", "top_p", "beam_size", "stop"}
    )
    prompt_field: str = "prompt"
    text_path: tuple = ("choices", 0, "text")
    param_names: dict = field(
        default_factory=lambda: {
            "max_new_tokens": "max_tokens",
            "temperature": "temperature",
            "top_k": "top_k",
            "top_p": "top_p",
            "beam_size": "num_beams",
            "stop": "stop",
        }
    )


PRESETS = {
    "completions": EndpointPreset(name="completions"),
    # Hosted completion APIs without beam/top-k controls.
    "completions-basic": EndpointPreset(
        name="completions-basic",
        supported=frozenset({"max_new_tokens", "temperature", "top_p", "stop"}),
    ),
}


def build_payload(request: CompletionRequest, preset: EndpointPreset, model: str):
    """Serialize a request for one provider; returns (payload, dropped names)."""
    payload = {"model": model, preset.prompt_field: request.prompt}
    dropped = []
    for name in ("max_new_tokens", "temperature", "top_k", "top_p", "beam_size", "stop"):
        value = getattr(request, name)
        if name == "stop":
            value = list(value)
            if not value:
                continue
        if name in preset.supported:
            payload[preset.param_names[name]] = value
        else:
            dropped.append(name)
    return payload, tuple(dropped)


def _extract_text(payload: dict, path) -> str:
    value = payload
    for step in path:
        value = value[step]
    return value


def _default_transport(url: str, payload: dict, headers: dict, timeout: float) -> dict:
    import requests

    response = requests.post(url, json=payload, headers=headers, timeout=timeout)
    response.raise_for_status()
    return response.json()


class RemoteBackend:
    """HTTP completion endpoint with bounded retry.

    The transport is injectable for testing; the API credential is read from
    the environment at call time, never stored in configuration files.
    """

    def __init__(self, url: str, model: str, preset: str = "completions",
                 api_key_env: str = DEFAULT_API_KEY_ENV, max_retries: int = 3,
                 backoff_base: float = 0.5, backoff_cap: float = 30.0,
                 timeout: float = 60.0, transport=None, sleeper=time.sleep):
        if preset not in PRESETS:
            raise ValueError(f"unknown endpoint preset: {preset!r}")
        self.url = url
        self.model = model
        self.preset = PRESETS[preset]
        self.api_key_env = api_key_env
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self.timeout = timeout
        self.transport = transport or _default_transport
        self.sleeper = sleeper
        self.backend_id = f"remote:{self.preset.name}:{model}"

    def _headers(self) -> dict:
        key = os.environ.get(self.api_key_env)
        if not key:
            raise BackendError(f"credential environment variable {self.api_key_env} is not set")
        return {"Authorization": f"Bearer {key}"}

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        payload, dropped = build_payload(request, self.preset, self.model)
        headers = self._headers()
        start = time.perf_counter()
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                self.sleeper(min(self.backoff_base * 2 ** (attempt - 1), self.backoff_cap))
            try:
                raw = self.transport(self.url, payload, headers, self.timeout)
                text = _extract_text(raw, self.preset.text_path)
                return CompletionResponse(
                    text=text,
                    backend_id=self.backend_id,
                    latency=time.perf_counter() - start,
                    retry_count=attempt,
                    dropped_params=dropped,
                )
            except Exception as exc:  # transport failures are provider-specific
                last_error = exc
        raise BackendError(
            f"completion failed after {self.max_retries + 1} attempts: {last_error}"
        ) from last_error


def complete(request: CompletionRequest, backend) -> CompletionResponse:
    """Run one request against any backend object."""
    return backend.complete(request)


def run_many(backend, requests, max_in_flight: int = 4):
    """Complete several requests with bounded concurrency.

    The result list matches the request order; failed items hold the raised
    BackendError instead of a response, so one bad row never aborts a run.
    """
    def guarded(request):
        try:
            return backend.complete(request)
        except BackendError as exc:
            return exc

    if max_in_flight <= 1:
        return [guarded(r) for r in requests]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(guarded, requests))
