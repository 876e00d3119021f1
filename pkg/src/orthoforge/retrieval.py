"""Latent descriptor storage, cosine retrieval, and Recall@K / AP metrics.

Descriptors are flatten + l2-normalize readouts of externally produced
latent tensors; search is exact brute force with double-precision dot
products and deterministic id tie-breaking.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IOFailure, ParseError, SchemaError

PACK_MAGIC = b"UAVDESC1"
PACK_VERSION = 1


@dataclass
class LatentTensor:
    id: str
    values: np.ndarray       # any shape; flattened row-major by readout
    label: str = ""


@dataclass
class Descriptor:
    id: str
    vector: np.ndarray       # unit l2 norm
    class_label: str = ""


@dataclass
class DescriptorSet:
    descriptors: list
    dim: int = field(init=False)

    def __post_init__(self):
        dims = {len(d.vector) for d in self.descriptors}
        if len(dims) > 1:
            raise SchemaError(f"mixed descriptor dimensions: {sorted(dims)}")
        self.dim = dims.pop() if dims else 0
        ids = [d.id for d in self.descriptors]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise SchemaError(f"duplicate descriptor ids: {dupes}")
        self._index = {d.id: i for i, d in enumerate(self.descriptors)}

    def __len__(self):
        return len(self.descriptors)

    def matrix(self) -> np.ndarray:
        if not self.descriptors:
            return np.zeros((0, 0))
        return np.stack([d.vector for d in self.descriptors]).astype(np.float64)

    def ids(self):
        return [d.id for d in self.descriptors]

    def labels(self):
        return [d.class_label for d in self.descriptors]


def readout(t: LatentTensor) -> Descriptor:
    """Flatten row-major and l2-normalize."""
    flat = np.asarray(t.values, dtype=np.float64).reshape(-1)
    if not np.isfinite(flat).all():
        raise DomainError(f"latent '{t.id}' contains non-finite values")
    norm = np.linalg.norm(flat)
    if norm == 0:
        raise DomainError(f"latent '{t.id}' is all-zero and cannot be normalized")
    return Descriptor(id=t.id, vector=flat / norm, class_label=t.label)


def cosine_sim(a: Descriptor, b: Descriptor) -> float:
    if len(a.vector) != len(b.vector):
        raise DomainError("descriptor dimensions differ")
    v = float(np.dot(a.vector.astype(np.float64), b.vector.astype(np.float64)))
    return min(1.0, max(-1.0, v))


def rank_all(queries: DescriptorSet, references: DescriptorSet) -> list[list[str]]:
    """Per-query reference ids by descending similarity; exact similarity
    ties break by ascending reference id."""
    if len(references) == 0:
        raise DomainError("reference set is empty")
    if queries.dim != references.dim and len(queries) > 0:
        raise DomainError("query and reference dimensions differ")
    ref_ids = references.ids()
    id_order = np.argsort(np.argsort(ref_ids, kind="stable"), kind="stable")
    sims = queries.matrix() @ references.matrix().T
    rankings = []
    for row in sims:
        order = np.lexsort((id_order, -row))
        rankings.append([ref_ids[i] for i in order])
    return rankings


def _relevance(rankings, query_labels, ref_label_by_id):
    for ranked, qlab in zip(rankings, query_labels):
        yield [ref_label_by_id[rid] == qlab for rid in ranked], qlab


def recall_at_k(
    rankings: list[list[str]],
    query_labels: list[str],
    ref_label_by_id: dict,
    k: int,
) -> float:
    """Percentage of valid queries with a same-class reference in the top K."""
    if k < 1:
        raise DomainError("K must be >= 1")
    hits = 0
    valid = 0
    for rel, _ in _relevance(rankings, query_labels, ref_label_by_id):
        if not any(rel):
            continue
        valid += 1
        if any(rel[:k]):
            hits += 1
    if valid == 0:
        raise DomainError("no query has any same-class reference")
    return 100.0 * hits / valid


def average_precision(
    rankings: list[list[str]],
    query_labels: list[str],
    ref_label_by_id: dict,
) -> tuple[float, list[float]]:
    """Mean non-interpolated AP over valid queries (percent) and per-query APs."""
    per_query = []
    for rel, _ in _relevance(rankings, query_labels, ref_label_by_id):
        n_pos = sum(rel)
        if n_pos == 0:
            per_query.append(None)
            continue
        found = 0
        acc = 0.0
        for rank, r in enumerate(rel, start=1):
            if r:
                found += 1
                acc += found / rank
        per_query.append(100.0 * acc / n_pos)
    valid = [v for v in per_query if v is not None]
    if not valid:
        raise DomainError("no query has any same-class reference")
    return float(np.mean(valid)), per_query


@dataclass
class RetrievalReport:
    recall_at: dict
    ap_mean: float
    per_query: list
    excluded_queries: list
    direction: str = ""

    def to_json_dict(self):
        return {
            "schema_version": 1,
            "direction": self.direction,
            "recall_at": {str(k): v for k, v in self.recall_at.items()},
            "ap_mean": self.ap_mean,
            "per_query": self.per_query,
            "excluded_queries": self.excluded_queries,
        }


def evaluate(
    queries: DescriptorSet,
    references: DescriptorSet,
    ks=(1, 5, 10),
    direction: str = "",
) -> RetrievalReport:
    rankings = rank_all(queries, references)
    ref_labels = dict(zip(references.ids(), references.labels()))
    q_labels = queries.labels()
    ap_mean, per_ap = average_precision(rankings, q_labels, ref_labels)
    recall = {
        int(k): recall_at_k(rankings, q_labels, ref_labels, int(k)) for k in ks
    }
    per_query = []
    excluded = []
    for qid, qlab, ranked, ap in zip(queries.ids(), q_labels, rankings, per_ap):
        if ap is None:
            excluded.append(qid)
            continue
        first_rank = next(
            i + 1 for i, rid in enumerate(ranked) if ref_labels[rid] == qlab
        )
        per_query.append({"id": qid, "first_correct_rank": first_rank, "ap": ap})
    return RetrievalReport(
        recall_at=recall, ap_mean=ap_mean, per_query=per_query,
        excluded_queries=excluded, direction=direction,
    )


def save_descriptor_pack(dset: DescriptorSet, path, normalized: bool = True) -> None:
    """Binary little-endian pack; see the README for the exact layout."""
    try:
        with open(path, "wb") as fh:
            fh.write(PACK_MAGIC)
            fh.write(struct.pack("<HBBII", PACK_VERSION, 1 if normalized else 0, 0,
                                 len(dset), dset.dim))
            for d in dset.descriptors:
                id_b = d.id.encode("utf-8")
                lab_b = d.class_label.encode("utf-8")
                fh.write(struct.pack("<H", len(id_b)))
                fh.write(id_b)
                fh.write(struct.pack("<H", len(lab_b)))
                fh.write(lab_b)
                fh.write(d.vector.astype("<f4").tobytes())
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def load_descriptor_pack(path) -> DescriptorSet:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
    if data[:8] != PACK_MAGIC:
        raise ParseError(f"bad descriptor pack magic {data[:8]!r}")
    if len(data) < 20:
        raise ParseError("descriptor pack header is truncated")
    version, normalized, _res, count, dim = struct.unpack("<HBBII", data[8:20])
    if version != PACK_VERSION:
        raise ParseError(f"unsupported descriptor pack version {version}")
    off = 20
    descriptors = []
    for _ in range(count):
        if off + 2 > len(data):
            raise ParseError("truncated descriptor record")
        (id_len,) = struct.unpack_from("<H", data, off)
        off += 2
        rid = data[off : off + id_len].decode("utf-8")
        off += id_len
        (lab_len,) = struct.unpack_from("<H", data, off)
        off += 2
        lab = data[off : off + lab_len].decode("utf-8")
        off += lab_len
        end = off + 4 * dim
        if end > len(data):
            raise ParseError(
                f"truncated descriptor values: expected {4 * dim} bytes, "
                f"got {len(data) - off}"
            )
        vec = np.frombuffer(data[off:end], dtype="<f4").astype(np.float64)
        off = end
        if not normalized:
            norm = np.linalg.norm(vec)
            if norm == 0:
                raise SchemaError(f"raw latent '{rid}' is all-zero")
            vec = vec / norm
        descriptors.append(Descriptor(id=rid, vector=vec, class_label=lab))
    return DescriptorSet(descriptors)
