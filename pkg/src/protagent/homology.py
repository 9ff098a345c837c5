"""Homology best-hit tool: k-mer prefiltered local alignment over an
annotated reference store.

Scoring: BLOSUM62 with affine gaps (open 11, extend 1; a gap of length L
costs open + (L-1)*extend). Bit scores use the published gapped-BLOSUM62
Karlin-Altschul constants; E-values use m*n*2^(-bits) with n the total
residue count of the store.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .blosum62 import BLOSUM62
from .errors import EmptyIndexError, MissingAnnotationError, SchemaError
from .seq import Sequence, parse_fasta

log = logging.getLogger(__name__)

GAP_OPEN = 11
GAP_EXTEND = 1
KA_LAMBDA = 0.267
KA_K = 0.041

DEFAULT_K = 5
DEFAULT_MIN_SEQ_ID = 0.3
DEFAULT_KMER_HIT_THRESHOLD = 2
DIAGONAL_BAND = 16


@dataclass(frozen=True)
class AnnotationRecord:
    """Curated annotation attached to a reference entry."""

    accessions: tuple[str, ...]
    protein_name: str
    function: tuple[str, ...] = ()
    catalytic_activity: tuple[str, ...] = ()
    ec: tuple[str, ...] = ()
    cofactor: tuple[str, ...] = ()
    subcellular_location: tuple[str, ...] = ()
    go: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.accessions:
            raise SchemaError("annotation record requires at least one accession")

    def to_payload(self) -> dict:
        return {
            "accessions": list(self.accessions),
            "protein_name": self.protein_name,
            "function": list(self.function),
            "catalytic_activity": list(self.catalytic_activity),
            "ec": list(self.ec),
            "cofactor": list(self.cofactor),
            "subcellular_location": list(self.subcellular_location),
            "go": list(self.go),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AnnotationRecord":
        try:
            accessions = tuple(obj["accessions"])
            protein_name = obj["protein_name"]
        except KeyError as exc:
            raise SchemaError(f"annotation record missing field {exc}") from exc
        return cls(
            accessions=accessions,
            protein_name=protein_name,
            function=tuple(obj.get("function", ())),
            catalytic_activity=tuple(obj.get("catalytic_activity", ())),
            ec=tuple(obj.get("ec", ())),
            cofactor=tuple(obj.get("cofactor", ())),
            subcellular_location=tuple(obj.get("subcellular_location", ())),
            go=tuple(obj.get("go", ())),
        )


@dataclass(frozen=True)
class ReferenceEntry:
    accession: str
    sequence: Sequence
    annotation: AnnotationRecord


@dataclass(frozen=True)
class Alignment:
    """One optimal local alignment (1-based inclusive coordinates)."""

    score: int
    query_start: int
    query_end: int
    target_start: int
    target_end: int
    identities: int
    aligned_length: int


@dataclass(frozen=True)
class BestHit:
    query: str
    target: str
    pident: float
    alnlen: int
    evalue: float
    bits: float

    def to_payload(self) -> dict:
        return {
            "query": self.query,
            "target": self.target,
            "pident": self.pident,
            "alnlen": self.alnlen,
            "evalue": self.evalue,
            "bits": self.bits,
        }


@dataclass
class ReferenceIndex:
    """Exact k-mer inverted index over a reference store."""

    entries: list[ReferenceEntry]
    k: int
    postings: dict[str, list[tuple[int, int]]] = field(repr=False, default_factory=dict)

    @property
    def total_residues(self) -> int:
        return sum(e.sequence.length for e in self.entries)


def build_index(entries: list[ReferenceEntry], k: int = DEFAULT_K) -> ReferenceIndex:
    """Build a k-mer -> [(entry ordinal, offset)] inverted index.

    Entries shorter than k contribute zero k-mers (warning, not fatal).
    """
    if not entries:
        raise EmptyIndexError("cannot build an index over zero entries")
    if not 3 <= k <= 7:
        raise ValueError(f"k must be in [3, 7], got {k}")
    postings: dict[str, list[tuple[int, int]]] = {}
    for ordinal, entry in enumerate(entries):
        res = entry.sequence.residues
        if len(res) < k:
            log.warning("entry %s shorter than k=%d; indexed with zero k-mers", entry.accession, k)
            continue
        for off in range(len(res) - k + 1):
            postings.setdefault(res[off : off + k], []).append((ordinal, off))
    for plist in postings.values():
        plist.sort()
    return ReferenceIndex(entries=entries, k=k, postings=postings)


def smith_waterman(
    a: Sequence,
    b: Sequence,
    matrix: dict[tuple[str, str], int] = BLOSUM62,
    gap_open: int = GAP_OPEN,
    gap_extend: int = GAP_EXTEND,
) -> Alignment | None:
    """Optimal local alignment under affine gaps (Gotoh recurrences).

    A gap of length L costs gap_open + (L-1)*gap_extend. Returns None when
    no alignment scores above zero. Among equally scoring alignments, the
    one with the smallest (query_start, target_start) is reported.
    """
    ra, rb = a.residues, b.residues
    n, m = len(ra), len(rb)
    neg = -(10 ** 9)

    # H: best score ending at (i, j); E: gap in query (consumes b); F: gap in target.
    h_rows = [[0] * (m + 1)]
    e_rows = [[neg] * (m + 1)]
    f_rows = [[neg] * (m + 1)]
    # Pointers: H cell from 'D'iag / 'E' / 'F' / '0' (fresh start);
    # E and F cells from 'H' (gap open) or their own state (extend).
    ph_rows = [["0"] * (m + 1)]
    pe_rows = [["H"] * (m + 1)]
    pf_rows = [["H"] * (m + 1)]
    best = 0
    ends: list[tuple[int, int]] = []
    for i in range(1, n + 1):
        h_row = [0] * (m + 1)
        e_row = [neg] * (m + 1)
        f_row = [neg] * (m + 1)
        ph_row = ["0"] * (m + 1)
        pe_row = ["H"] * (m + 1)
        pf_row = ["H"] * (m + 1)
        ca = ra[i - 1]
        prev_h = h_rows[i - 1]
        prev_f = f_rows[i - 1]
        for j in range(1, m + 1):
            e_open = h_row[j - 1] - gap_open
            e_ext = e_row[j - 1] - gap_extend
            if e_open >= e_ext:
                e_row[j] = e_open
            else:
                e_row[j] = e_ext
                pe_row[j] = "E"
            f_open = prev_h[j] - gap_open
            f_ext = prev_f[j] - gap_extend
            if f_open >= f_ext:
                f_row[j] = f_open
            else:
                f_row[j] = f_ext
                pf_row[j] = "F"
            diag = prev_h[j - 1] + matrix[(ca, rb[j - 1])]
            h, p = 0, "0"
            if diag >= h:
                h, p = diag, "D"
            if e_row[j] > h:
                h, p = e_row[j], "E"
            if f_row[j] > h:
                h, p = f_row[j], "F"
            if h == 0:
                p = "0"
            h_row[j] = h
            ph_row[j] = p
            if h > best:
                best = h
                ends = [(i, j)]
            elif h == best and h > 0:
                ends.append((i, j))
        h_rows.append(h_row)
        e_rows.append(e_row)
        f_rows.append(f_row)
        ph_rows.append(ph_row)
        pe_rows.append(pe_row)
        pf_rows.append(pf_row)

    if best <= 0:
        return None

    candidates = [
        _traceback(ra, rb, best, ph_rows, pe_rows, pf_rows, i, j) for i, j in ends
    ]
    return min(candidates, key=lambda al: (al.query_start, al.target_start, al.query_end, al.target_end))


def _traceback(ra, rb, score, ph_rows, pe_rows, pf_rows, i, j) -> Alignment:
    query_end, target_end = i, j
    identities = 0
    aligned = 0
    state = "H"
    while True:
        if state == "H":
            p = ph_rows[i][j]
            if p == "D":
                aligned += 1
                if ra[i - 1] == rb[j - 1]:
                    identities += 1
                i -= 1
                j -= 1
                if ph_rows[i][j] == "0":
                    break
            elif p in ("E", "F"):
                state = p
            else:  # '0' — only reachable if the end cell itself is a fresh start
                break
        elif state == "E":
            aligned += 1
            state = "H" if pe_rows[i][j] == "H" else "E"
            j -= 1
        else:  # F
            aligned += 1
            state = "H" if pf_rows[i][j] == "H" else "F"
            i -= 1
    return Alignment(
        score=score,
        query_start=i + 1,
        query_end=query_end,
        target_start=j + 1,
        target_end=target_end,
        identities=identities,
        aligned_length=aligned,
    )


def bit_score(raw_score: int) -> float:
    return (KA_LAMBDA * raw_score - math.log(KA_K)) / math.log(2)


def e_value(bits: float, query_len: int, db_residues: int) -> float:
    return query_len * db_residues * (2.0 ** (-bits))


def _candidate_ordinals(index: ReferenceIndex, query: Sequence, hit_threshold: int) -> list[int]:
    """Entries sharing >= hit_threshold k-mers on nearby diagonals."""
    k = index.k
    res = query.residues
    diagonals: dict[int, list[int]] = {}
    for qpos in range(len(res) - k + 1):
        for ordinal, off in index.postings.get(res[qpos : qpos + k], ()):
            diagonals.setdefault(ordinal, []).append(qpos - off)
    out = []
    for ordinal, diags in diagonals.items():
        diags.sort()
        for lo in range(len(diags) - hit_threshold + 1):
            if diags[lo + hit_threshold - 1] - diags[lo] <= DIAGONAL_BAND:
                out.append(ordinal)
                break
    return sorted(out)


def search_best_hit(
    index: ReferenceIndex,
    query: Sequence,
    min_seq_id: float = DEFAULT_MIN_SEQ_ID,
    kmer_hit_threshold: int = DEFAULT_KMER_HIT_THRESHOLD,
    workers: int = 1,
) -> BestHit | None:
    """Best hit by (lowest E-value, highest bits, lexicographic accession)."""
    if not index.entries:
        raise EmptyIndexError("search against an empty index")
    ordinals = _candidate_ordinals(index, query, kmer_hit_threshold)
    if not ordinals:
        return None

    db_residues = index.total_residues

    def align_one(ordinal: int) -> tuple[float, float, str, BestHit] | None:
        entry = index.entries[ordinal]
        aln = smith_waterman(query, entry.sequence)
        if aln is None:
            return None
        pident = 100.0 * aln.identities / aln.aligned_length
        if pident < min_seq_id * 100.0:
            return None
        bits = bit_score(aln.score)
        ev = e_value(bits, query.length, db_residues)
        hit = BestHit(
            query=query.id,
            target=entry.accession,
            pident=round(pident, 1),
            alnlen=aln.aligned_length,
            evalue=float(f"{ev:.4g}"),
            bits=round(bits, 1),
        )
        return (ev, -bits, entry.accession, hit)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ranked = [r for r in pool.map(align_one, ordinals) if r is not None]
    else:
        ranked = [r for r in map(align_one, ordinals) if r is not None]
    if not ranked:
        return None
    ranked.sort(key=lambda t: t[:3])
    return ranked[0][3]


def make_evidence(hit: BestHit, annotations: dict[str, AnnotationRecord]) -> dict:
    """Best-hit plus annotation payload, the tool's evidence object."""
    if hit.target not in annotations:
        raise MissingAnnotationError(f"no annotation stored for accession {hit.target!r}")
    return {
        "best_hit": hit.to_payload(),
        "uniprot_annotation": annotations[hit.target].to_payload(),
    }


def load_annotations(path: str) -> dict[str, AnnotationRecord]:
    """Load a JSON-lines annotation store keyed by primary accession."""
    out: dict[str, AnnotationRecord] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"annotation line {line_no} is not valid JSON: {exc}") from exc
            record = AnnotationRecord.from_json(obj)
            out[obj.get("accession", record.accessions[0])] = record
    return out


def save_built_store(entries: list[ReferenceEntry], path: str) -> None:
    """Write a validated single-file reference store."""
    obj = {
        "entries": [
            {
                "accession": e.accession,
                "sequence": e.sequence.residues,
                "annotation": e.annotation.to_payload(),
            }
            for e in entries
        ]
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def load_built_store(path: str) -> list[ReferenceEntry]:
    """Load a store written by save_built_store."""
    from .seq import validate_sequence

    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if "entries" not in obj:
        raise SchemaError(f"{path} is not a built reference store (no 'entries' key)")
    return [
        ReferenceEntry(
            accession=e["accession"],
            sequence=validate_sequence(e["accession"], e["sequence"]),
            annotation=AnnotationRecord.from_json(e["annotation"]),
        )
        for e in obj["entries"]
    ]


def load_reference_store(fasta_path: str, annotations_path: str) -> list[ReferenceEntry]:
    """Pair a FASTA file with its JSON-lines annotations by accession."""
    with open(fasta_path, encoding="utf-8") as fh:
        records = parse_fasta(fh.read())
    annotations = load_annotations(annotations_path)
    entries = []
    for rec in records:
        acc = rec.sequence.id
        if acc not in annotations:
            raise MissingAnnotationError(f"FASTA entry {acc!r} has no annotation record")
        entries.append(ReferenceEntry(accession=acc, sequence=rec.sequence, annotation=annotations[acc]))
    return entries
