"""Relation-phrase pool: normalization, embedding, clustering and witness parsing.

The parser is a lexicon with an embedding fallback. Exact lexicon hits map a
phrase to a dominant witness family; unknown phrases are softly assigned by
nearest lexicon embedding, with the functional/uncertain family as the
assignment of last resort.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Optional, Sequence

import numpy as np

from relwit.families import FAMILY_ORDER, N_FAMILIES, WitnessFamily

EMBED_DIM = 64
_HASH_DIM = 56  # char-trigram + token features; dims 56..63 hold family markers
_MARKER_WEIGHT = 8.0
CLUSTER_COSINE_THRESHOLD = 0.75  # calibrated on the shipped lexicon, frozen

_DETERMINERS = {"a", "an", "the"}
# -ing participles kept verbatim (the relation sense lives in the participle).
_ING_KEEP = {
    "standing",
    "resting",
    "hanging",
    "facing",
    "looking",
    "holding",
    "touching",
    "leaning",
}
_PLURAL_KEEP = {"is", "its", "this", "has", "was", "does", "as", "us", "gas", "bus", "thus", "yes"}

_VOWELS = "aeiou"


class PoolError(ValueError):
    """Raised when pool construction cannot proceed (e.g. empty sources)."""


def _stem_token(token: str) -> str:
    if token.endswith("ing") and len(token) >= 6 and token not in _ING_KEEP:
        stem = token[:-3]
        if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS:
            stem = stem[:-1]
        return stem
    if (
        token.endswith("s")
        and not token.endswith("ss")
        and len(token) >= 4
        and token not in _PLURAL_KEEP
    ):
        return token[:-1]
    return token


def normalize_phrase(raw: str) -> str:
    """Lowercase, strip determiners, apply the light suffix rules, collapse spaces."""
    if not raw or not raw.strip():
        raise PoolError("cannot normalize an empty phrase")
    text = re.sub(r"[^a-z0-9 ]+", " ", raw.lower())
    tokens = [t for t in text.split() if t not in _DETERMINERS]
    tokens = [_stem_token(t) for t in tokens]
    return " ".join(tokens)


def _hash_index(key: str) -> tuple[int, float]:
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    value = int.from_bytes(digest, "big")
    sign = 1.0 if value & 1 else -1.0
    return (value >> 1) % _HASH_DIM, sign


def _char_token_features(normalized: str) -> np.ndarray:
    vec = np.zeros(EMBED_DIM)
    padded = f" {normalized} "
    for i in range(len(padded) - 2):
        idx, sign = _hash_index("tri:" + padded[i : i + 3])
        vec[idx] += sign
    for token in normalized.split():
        idx, sign = _hash_index("tok:" + token)
        vec[idx] += sign
    return vec


@dataclass(frozen=True)
class LexiconEntry:
    phrase: str  # normalized form
    family: WitnessFamily
    directed: bool
    direction: str  # "" or one of up/down/front/back


class Lexicon:
    """Normalized phrase -> witness family table with embedding fallback support."""

    def __init__(self, entries: Sequence[LexiconEntry]):
        if not entries:
            raise PoolError("lexicon must not be empty")
        self.entries = list(entries)
        self._by_phrase = {e.phrase: e for e in self.entries}
        # Marker-free embeddings used for soft nearest-entry assignment.
        feats = np.stack([_char_token_features(e.phrase) for e in self.entries])
        norms = np.linalg.norm(feats, axis=1, keepdims=True)
        self._plain = feats / np.maximum(norms, 1e-12)
        self._directedness = np.zeros(N_FAMILIES)
        for k, fam in enumerate(FAMILY_ORDER):
            flags = [e.directed for e in self.entries if e.family is fam]
            self._directedness[k] = float(np.mean(flags)) if flags else 1.0

    def lookup(self, normalized: str) -> Optional[LexiconEntry]:
        return self._by_phrase.get(normalized)

    def family_similarities(self, normalized: str) -> np.ndarray:
        """Per-family max cosine between the phrase and the lexicon entries."""
        q = _char_token_features(normalized)
        q = q / max(np.linalg.norm(q), 1e-12)
        sims = self._plain @ q
        best = np.zeros(N_FAMILIES)
        for sim, entry in zip(sims, self.entries):
            k = entry.family.index
            best[k] = max(best[k], float(sim))
        return best

    @property
    def family_directedness(self) -> np.ndarray:
        return self._directedness.copy()


def load_lexicon(path=None) -> Lexicon:
    """Load the lexicon (shipped file by default); entries are normalized on load."""
    if path is None:
        text = resources.files("relwit.data").joinpath("lexicon.jsonl").read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    entries = []
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        entries.append(
            LexiconEntry(
                phrase=normalize_phrase(rec["phrase"]),
                family=WitnessFamily.from_name(rec["family"]),
                directed=bool(rec["directed"]),
                direction=rec.get("direction", ""),
            )
        )
    return Lexicon(entries)


_DEFAULT_LEXICON: Optional[Lexicon] = None


def default_lexicon() -> Lexicon:
    global _DEFAULT_LEXICON
    if _DEFAULT_LEXICON is None:
        _DEFAULT_LEXICON = load_lexicon()
    return _DEFAULT_LEXICON


def default_pool_sources() -> list[list[str]]:
    """Shipped sources: every lexicon phrase plus a few open-vocabulary extras."""
    lex = [e.phrase for e in default_lexicon().entries]
    extras = (
        resources.files("relwit.data").joinpath("pool_extras.txt").read_text().split("\n")
    )
    return [lex, [p for p in extras if p.strip()]]


def embed_phrase(normalized: str, lexicon: Optional[Lexicon] = None) -> np.ndarray:
    """Deterministic 64-dim phrase embedding, unit L2 norm.

    Hashed character trigrams and token unigrams fill the first 56 dims; the
    last 8 dims carry a family marker for exact lexicon hits so that lexicon
    synonyms land above the cluster-merge threshold.
    """
    lexicon = lexicon or default_lexicon()
    vec = _char_token_features(normalized)
    entry = lexicon.lookup(normalized)
    if entry is not None:
        vec[_HASH_DIM + entry.family.index] = _MARKER_WEIGHT
    return vec / max(np.linalg.norm(vec), 1e-12)


@dataclass
class RelationPhrase:
    """One pooled relation phrase with its parse and cluster assignment."""

    raw: str
    normalized: str
    cluster_id: int
    embedding: np.ndarray
    family_dist: np.ndarray  # (8,), sums to 1
    role_sensitivity: float
    directional: bool
    direction: str = ""

    @property
    def family(self) -> WitnessFamily:
        """Argmax witness family of the parse."""
        return FAMILY_ORDER[int(np.argmax(self.family_dist))]


_SOFT_TEMPERATURE = 0.08
_FUNCTIONAL_FLOOR = 0.25
_SIM_NOISE_FLOOR = 0.3  # hash-collision noise sits well below this
_EXACT_MASS = 0.9


def parse_witness(
    normalized: str, lexicon: Optional[Lexicon] = None
) -> tuple[np.ndarray, float, bool, str]:
    """Map a normalized phrase to (family_dist, role_sensitivity, directional, direction)."""
    lexicon = lexicon or default_lexicon()
    entry = lexicon.lookup(normalized)
    if entry is not None:
        dist = np.full(N_FAMILIES, (1.0 - _EXACT_MASS) / N_FAMILIES)
        dist[entry.family.index] += _EXACT_MASS
        d_r = 1.0 if entry.directed else 0.0
        return dist, d_r, entry.direction != "", entry.direction
    sims = lexicon.family_similarities(normalized)
    sims[sims < _SIM_NOISE_FLOOR] = 0.0
    k_fun = WitnessFamily.FUNCTIONAL_UNCERTAIN.index
    sims[k_fun] = max(sims[k_fun], _FUNCTIONAL_FLOOR)
    logits = sims / _SOFT_TEMPERATURE
    logits -= logits.max()
    dist = np.exp(logits)
    dist /= dist.sum()
    d_r = float(dist @ lexicon.family_directedness)
    return dist, d_r, False, ""


class PhrasePool(Sequence[RelationPhrase]):
    """Immutable pool of parsed, clustered relation phrases."""

    def __init__(self, phrases: Sequence[RelationPhrase], lexicon: Lexicon):
        self.phrases = list(phrases)
        self.lexicon = lexicon
        self._by_normalized = {p.normalized: p for p in self.phrases}
        self._clusters: dict[int, list[RelationPhrase]] = {}
        for p in self.phrases:
            self._clusters.setdefault(p.cluster_id, []).append(p)

    def __len__(self) -> int:
        return len(self.phrases)

    def __getitem__(self, i):
        return self.phrases[i]

    def get(self, phrase: str) -> Optional[RelationPhrase]:
        return self._by_normalized.get(normalize_phrase(phrase))

    def cluster_members(self, cluster_id: int) -> list[RelationPhrase]:
        return list(self._clusters.get(cluster_id, []))

    def representatives(self) -> list[RelationPhrase]:
        """One phrase per cluster: the lexicographically smallest normalized form."""
        reps = []
        for cid in sorted(self._clusters):
            reps.append(min(self._clusters[cid], key=lambda p: p.normalized))
        return reps

    def cluster_of(self, phrase: str) -> int:
        entry = self.get(phrase)
        if entry is None:
            raise PoolError(f"phrase {phrase!r} is not in the pool")
        return entry.cluster_id


def build_pool(
    sources: Iterable[Iterable[str]], lexicon: Optional[Lexicon] = None
) -> PhrasePool:
    """Normalize, deduplicate, embed, cluster and parse phrases from the sources.

    Clustering is greedy single-linkage on embedding cosine; merges never cross
    the directional flag, and directional phrases only merge within the same
    polarity group (above/over vs below/under etc. stay distinct).
    """
    lexicon = lexicon or default_lexicon()
    raw_by_norm: dict[str, str] = {}
    for source in sources:
        for raw in source:
            norm = normalize_phrase(raw)
            if norm and norm not in raw_by_norm:
                raw_by_norm[norm] = raw
    if not raw_by_norm:
        raise PoolError("no phrases left after normalization")

    norms = sorted(raw_by_norm)
    embeddings = np.stack([embed_phrase(n, lexicon) for n in norms])
    parses = [parse_witness(n, lexicon) for n in norms]
    keys = [parse[3] for parse in parses]  # polarity group; "" when not directional

    parent = list(range(len(norms)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    cos = embeddings @ embeddings.T
    for i in range(len(norms)):
        for j in range(i + 1, len(norms)):
            if keys[i] != keys[j]:
                continue
            if cos[i, j] >= CLUSTER_COSINE_THRESHOLD:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    root_to_cid: dict[int, int] = {}
    phrases = []
    for i, norm in enumerate(norms):
        root = find(i)
        if root not in root_to_cid:
            root_to_cid[root] = len(root_to_cid)
        dist, d_r, directional, direction = parses[i]
        phrases.append(
            RelationPhrase(
                raw=raw_by_norm[norm],
                normalized=norm,
                cluster_id=root_to_cid[root],
                embedding=embeddings[i],
                family_dist=dist,
                role_sensitivity=d_r,
                directional=directional,
                direction=direction,
            )
        )
    phrases.sort(key=lambda p: (p.cluster_id, p.normalized))
    return PhrasePool(phrases, lexicon)


def save_pool(pool: PhrasePool, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pool:
            rec = {
                "raw": p.raw,
                "normalized": p.normalized,
                "cluster_id": p.cluster_id,
                "embedding": [float(x) for x in p.embedding],
                "family_dist": [float(x) for x in p.family_dist],
                "role_sensitivity": p.role_sensitivity,
                "directional": p.directional,
                "direction": p.direction,
            }
            fh.write(json.dumps(rec) + "\n")


def load_pool(path, lexicon: Optional[Lexicon] = None) -> PhrasePool:
    lexicon = lexicon or default_lexicon()
    phrases = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            phrases.append(
                RelationPhrase(
                    raw=rec["raw"],
                    normalized=rec["normalized"],
                    cluster_id=int(rec["cluster_id"]),
                    embedding=np.asarray(rec["embedding"]),
                    family_dist=np.asarray(rec["family_dist"]),
                    role_sensitivity=float(rec["role_sensitivity"]),
                    directional=bool(rec["directional"]),
                    direction=rec.get("direction", ""),
                )
            )
    return PhrasePool(phrases, lexicon)
