"""Embedding-backed nearest-neighbor retrieval of premises and tactics.

The index is an exact full-scan cosine index: small corpora make anything
fancier pointless. Items carry a key text (what gets embedded), a payload
kind ("premise" or "tactic"), and a payload (what gets spliced into prompts).
Ties on similarity break by ascending key text so results are reproducible
across platforms.

Two providers ship: a deterministic mock that derives a unit vector from a
hash of the text (stable across runs and machines), and an HTTP provider for
real embedding endpoints. Credentials come from environment variables only.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import FormatError, ProviderError, ZeroVectorError

PREMISE = "premise"
TACTIC = "tactic"


@dataclass(frozen=True)
class EmbeddingVector:
    """A fixed-length real vector; every entry must be finite."""

    values: tuple[float, ...]
    dim: int

    def __post_init__(self):
        if len(self.values) != self.dim:
            raise ValueError(f"vector has {len(self.values)} entries, dim says {self.dim}")
        if not all(np.isfinite(self.values)):
            raise ValueError("embedding entries must be finite")

    @classmethod
    def from_array(cls, array: np.ndarray) -> "EmbeddingVector":
        values = tuple(float(x) for x in np.asarray(array, dtype=float).ravel())
        return cls(values=values, dim=len(values))


@dataclass(frozen=True)
class IndexItem:
    key_text: str
    kind: str
    payload: str
    vector: EmbeddingVector


class MockEmbeddingProvider:
    """Deterministic provider: a unit vector seeded by a hash of the text.

    Identical texts embed identically on every run and platform; distinct
    texts land in effectively random directions.
    """

    def __init__(self, dim: int = 32, seed: int = 0):
        self.dim = dim
        self.seed = seed

    def embed(self, text: str) -> EmbeddingVector:
        digest = hashlib.sha256(f"{self.seed}\x1f{text}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        raw = rng.standard_normal(self.dim)
        norm = float(np.linalg.norm(raw))
        if norm == 0.0:  # astronomically unlikely; keep the contract total
            raw = np.ones(self.dim)
            norm = float(np.linalg.norm(raw))
        return EmbeddingVector.from_array(raw / norm)


class HttpEmbeddingProvider:
    """Thin client for an embeddings endpoint.

    The API key is read from the named environment variable at call time and
    never stored in configuration files. `transport` is injectable so the
    request/response handling is testable without a network.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key_env: str = "PROOFORGE_API_KEY",
        timeout: float = 30.0,
        transport: Optional[Callable] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout
        self._transport = transport or self._default_transport
        self.dim: Optional[int] = None

    def _default_transport(self, url: str, payload: dict, headers: dict) -> dict:
        import requests

        reply = requests.post(url, json=payload, headers=headers, timeout=self.timeout)
        reply.raise_for_status()
        return reply.json()

    def embed(self, text: str) -> EmbeddingVector:
        headers = {}
        key = os.environ.get(self.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            body = self._transport(
                f"{self.base_url}/embeddings",
                {"model": self.model, "input": [text]},
                headers,
            )
            vector = EmbeddingVector.from_array(np.asarray(body["data"][0]["embedding"]))
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ProviderError(f"malformed embedding response: {exc}", key=text)
        except Exception as exc:
            raise ProviderError(f"embedding request failed: {exc}", key=text)
        if self.dim is None:
            self.dim = vector.dim
        return vector


@dataclass
class RetrievalIndex:
    """Exact cosine index over embedded items."""

    provider: object
    items: list[IndexItem]
    dim: int

    def _matrix(self, kind: Optional[str]) -> tuple[list[IndexItem], np.ndarray]:
        chosen = [it for it in self.items if kind is None or it.kind == kind]
        if not chosen:
            return chosen, np.zeros((0, self.dim))
        return chosen, np.array([it.vector.values for it in chosen], dtype=float)


def build_index(
    provider,
    premises: Sequence[tuple[str, str]] = (),
    tactics: Sequence[Union[str, tuple[str, str]]] = (),
) -> RetrievalIndex:
    """Embed premises and tactics into a fresh index.

    Premises are (name, statement) pairs keyed by ``name : statement``.
    Tactics are either bare tactic texts, or (tactic, goal_text) pairs keyed
    by the tactic plus the goal it was used on; the payload returned by
    retrieval is always just the tactic text.
    """
    items: list[IndexItem] = []
    dim: Optional[int] = None
    for name, statement in premises:
        key = f"{name} : {statement}"
        vector = provider.embed(key)
        dim = vector.dim if dim is None else dim
        items.append(IndexItem(key_text=key, kind=PREMISE, payload=key, vector=vector))
    for entry in tactics:
        if isinstance(entry, tuple):
            tactic, goal = entry
            key = f"{tactic} \x1f {goal}"
        else:
            tactic, key = entry, entry
        vector = provider.embed(key)
        dim = vector.dim if dim is None else dim
        items.append(IndexItem(key_text=key, kind=TACTIC, payload=tactic, vector=vector))
    if dim is None:
        dim = getattr(provider, "dim", None) or 0
    for item in items:
        if item.vector.dim != dim:
            raise ValueError(
                f"provider returned mixed dimensions: {item.vector.dim} vs {dim}"
            )
    return RetrievalIndex(provider=provider, items=items, dim=dim)


def retrieve(
    index: RetrievalIndex,
    query: str,
    k: int = 5,
    kind: Optional[str] = None,
) -> list[tuple[str, float]]:
    """Top-k payloads by cosine similarity to the query, descending.

    Ties break by ascending key text. A query that embeds to the zero vector
    raises ZeroVectorError; provider failures propagate as ProviderError with
    the query as the failing key.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    try:
        qvec = index.provider.embed(query)
    except ProviderError:
        raise
    except Exception as exc:
        raise ProviderError(f"query embedding failed: {exc}", key=query)
    q = np.asarray(qvec.values, dtype=float)
    qnorm = float(np.linalg.norm(q))
    if qnorm == 0.0:
        raise ZeroVectorError(f"query embeds to the zero vector: {query!r}")
    chosen, matrix = index._matrix(kind)
    if not chosen:
        return []
    norms = np.linalg.norm(matrix, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    sims = (matrix @ q) / (safe * qnorm)
    sims = np.where(norms == 0.0, -1.0, sims)
    order = sorted(
        range(len(chosen)), key=lambda i: (-sims[i], chosen[i].key_text)
    )
    return [(chosen[i].payload, float(sims[i])) for i in order[:k]]


INDEX_HEADER = "#prooforge-index v1"


def save_index(index: RetrievalIndex, path: str) -> None:
    """Persist the index: a header naming dim and count, then one JSON line
    per item with its vector, so reload needs no provider calls."""
    lines = [f"{INDEX_HEADER} {index.dim} {len(index.items)}"]
    for item in index.items:
        lines.append(json.dumps(
            {
                "key": item.key_text,
                "kind": item.kind,
                "payload": item.payload,
                "values": list(item.vector.values),
            },
            sort_keys=True,
            ensure_ascii=False,
        ))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_index(path: str, provider) -> RetrievalIndex:
    """Reload a persisted index; `provider` is only used for future queries."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().split("\n")
    if not raw or not raw[0].startswith(INDEX_HEADER):
        raise FormatError(f"missing {INDEX_HEADER!r} header", line=1)
    tail = raw[0][len(INDEX_HEADER):].split()
    if len(tail) != 2:
        raise FormatError("header must carry dim and item count", line=1)
    dim, count = int(tail[0]), int(tail[1])
    items: list[IndexItem] = []
    for lineno, line in enumerate(raw[1:], start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            items.append(IndexItem(
                key_text=obj["key"],
                kind=obj["kind"],
                payload=obj["payload"],
                vector=EmbeddingVector(tuple(float(v) for v in obj["values"]), dim=len(obj["values"])),
            ))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad index item: {exc}", line=lineno)
    if len(items) != count:
        raise FormatError(f"header promised {count} items, found {len(items)}")
    return RetrievalIndex(provider=provider, items=items, dim=dim)
