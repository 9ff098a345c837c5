"""Profile-HMM domain scan tool.

Reads a plain-text profile library (HMMER3-style ASCII subset), scores
sequences by local Viterbi in log-odds space, and reports ranked domain
hits plus a filtered non-overlapping selection.

Library format, per record:

    HMMER3/f  <comment>
    NAME  <family id>
    ACC   <accession>
    DESC  <free text>
    LENG  <match-state count>
    ALPH  amino
    HMM   <20 residue letters, alphabetical>
          m->m m->i m->d i->m i->i d->m d->d
      COMPO  <20 values>                      (optional background row)
      <k>  <20 match emission values>
           <20 insert emission values>
           <7 transition values>
      ...
    //

All stored values are negative natural logs of probabilities; '*' means
probability zero. Unrecognized header keys are ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    EmptyLibraryError,
    MalformedProfileError,
    ProfileParseError,
    TruncatedProfileError,
)
from .seq import CANONICAL_RESIDUES, Sequence

RESIDUE_ORDER = tuple(sorted(CANONICAL_RESIDUES))
_RES_INDEX = {r: i for i, r in enumerate(RESIDUE_ORDER)}
_LN2 = math.log(2)

TRANSITION_ORDER = ("MM", "MI", "MD", "IM", "II", "DM", "DD")

DEFAULT_REPORT_THRESHOLD = 1.0
DEFAULT_SELECTION_THRESHOLD = 0.01

_UNIFORM_BACKGROUND = tuple([1.0 / 20] * 20)


@dataclass(frozen=True)
class ProfileHmm:
    name: str
    accession: str
    description: str
    model_length: int
    match_emissions: tuple[tuple[float, ...], ...]  # neg-ln, one 20-row per node
    insert_emissions: tuple[tuple[float, ...], ...]
    transitions: tuple[tuple[float, ...], ...]  # neg-ln, 7 per node (TRANSITION_ORDER)
    background: tuple[float, ...] = _UNIFORM_BACKGROUND  # frequencies

    def __post_init__(self):
        if self.model_length < 1:
            raise MalformedProfileError(f"profile {self.name!r}: model length must be >= 1")
        for rows, label in ((self.match_emissions, "match"), (self.insert_emissions, "insert")):
            if len(rows) != self.model_length:
                raise TruncatedProfileError(
                    f"profile {self.name!r}: {len(rows)} {label} emission rows for length {self.model_length}"
                )
            for k, row in enumerate(rows, start=1):
                total = sum(math.exp(-v) for v in row)
                if abs(total - 1.0) > 1e-6:
                    raise MalformedProfileError(
                        f"profile {self.name!r}: {label} emissions at node {k} sum to {total}, not 1"
                    )
        if len(self.transitions) != self.model_length:
            raise TruncatedProfileError(
                f"profile {self.name!r}: {len(self.transitions)} transition rows for length {self.model_length}"
            )


@dataclass(frozen=True)
class DomainHit:
    pfam_id: str
    pfam_acc: str
    query: str
    evalue: float
    score: float
    hmm_from: int
    hmm_to: int
    ali_from: int
    ali_to: int
    coverage_query: float
    desc: str

    def to_payload(self) -> dict:
        return {
            "pfam_id": self.pfam_id,
            "pfam_acc": self.pfam_acc,
            "query": self.query,
            "evalue": self.evalue,
            "score": self.score,
            "hmm_from": self.hmm_from,
            "hmm_to": self.hmm_to,
            "ali_from": self.ali_from,
            "ali_to": self.ali_to,
            "coverage_query": self.coverage_query,
            "desc": self.desc,
        }


@dataclass(frozen=True)
class DomainScanResult:
    hits: tuple[DomainHit, ...]
    selected_domains: tuple[DomainHit, ...]

    def to_payload(self) -> dict:
        return {
            "hits": [h.to_payload() for h in self.hits],
            "selected_domains": [h.to_payload() for h in self.selected_domains],
        }


def _parse_value(token: str, line_no: int) -> float:
    if token == "*":
        return math.inf
    try:
        return float(token)
    except ValueError as exc:
        raise ProfileParseError(f"non-numeric field {token!r} at line {line_no}") from exc


def parse_hmm_library(text: str) -> list[ProfileHmm]:
    """Parse zero or more profile records from library text."""
    profiles: list[ProfileHmm] = []
    lines = text.splitlines()
    i = 0
    n = len(lines)
    while i < n:
        line = lines[i].strip()
        if not line:
            i += 1
            continue
        if not line.startswith("HMMER3"):
            raise ProfileParseError(f"expected record header at line {i + 1}, got {line!r}")
        i += 1
        header: dict[str, str] = {}
        while i < n and lines[i].split() and lines[i].split()[0] != "HMM":
            fields = lines[i].split(None, 1)
            header[fields[0]] = fields[1].strip() if len(fields) > 1 else ""
            i += 1
        if i >= n:
            raise ProfileParseError(f"record {header.get('NAME', '?')!r}: missing HMM section")
        if "LENG" not in header:
            raise MalformedProfileError(f"record {header.get('NAME', '?')!r}: missing LENG")
        try:
            leng = int(header["LENG"])
        except ValueError as exc:
            raise ProfileParseError(f"record {header.get('NAME', '?')!r}: bad LENG {header['LENG']!r}") from exc
        i += 2  # skip HMM residue-order line and transition-order line
        background = _UNIFORM_BACKGROUND
        if i < n and lines[i].split() and lines[i].split()[0] == "COMPO":
            tokens = lines[i].split()[1:]
            if len(tokens) != 20:
                raise ProfileParseError(f"COMPO row at line {i + 1} has {len(tokens)} values, expected 20")
            background = tuple(math.exp(-_parse_value(t, i + 1)) for t in tokens)
            i += 1
        match_rows, insert_rows, transition_rows = [], [], []
        name = header.get("NAME", "?")
        while i < n:
            stripped = lines[i].strip()
            if stripped == "//":
                break
            if stripped.startswith("HMMER3") or not stripped:
                raise ProfileParseError(f"record {name!r}: missing '//' terminator")
            node_tokens = lines[i].split()
            expect = str(len(match_rows) + 1)
            if node_tokens[0] != expect:
                raise ProfileParseError(
                    f"record {name!r}: expected node {expect} at line {i + 1}, got {node_tokens[0]!r}"
                )
            if len(node_tokens) != 21:
                raise ProfileParseError(f"match row at line {i + 1} has {len(node_tokens) - 1} values, expected 20")
            match_rows.append(tuple(_parse_value(t, i + 1) for t in node_tokens[1:]))
            if i + 2 >= n:
                raise TruncatedProfileError(f"record {name!r}: truncated node block at line {i + 1}")
            ins_tokens = lines[i + 1].split()
            if len(ins_tokens) != 20:
                raise ProfileParseError(f"insert row at line {i + 2} has {len(ins_tokens)} values, expected 20")
            insert_rows.append(tuple(_parse_value(t, i + 2) for t in ins_tokens))
            tr_tokens = lines[i + 2].split()
            if len(tr_tokens) != 7:
                raise ProfileParseError(f"transition row at line {i + 3} has {len(tr_tokens)} values, expected 7")
            transition_rows.append(tuple(_parse_value(t, i + 3) for t in tr_tokens))
            i += 3
        else:
            raise ProfileParseError(f"record {name!r}: missing '//' terminator")
        if len(match_rows) != leng:
            raise TruncatedProfileError(
                f"record {name!r}: {len(match_rows)} emission rows for LENG {leng}"
            )
        profiles.append(
            ProfileHmm(
                name=name,
                accession=header.get("ACC", ""),
                description=header.get("DESC", ""),
                model_length=leng,
                match_emissions=tuple(match_rows),
                insert_emissions=tuple(insert_rows),
                transitions=tuple(transition_rows),
                background=background,
            )
        )
        i += 1  # past '//'
    return profiles


def _fmt(value: float) -> str:
    return "*" if math.isinf(value) else f"{value:.10f}"


def write_hmm_library(profiles: list[ProfileHmm]) -> str:
    """Serialize profiles back to library text (inverse of parse_hmm_library)."""
    out = []
    for p in profiles:
        out.append("HMMER3/f  protagent profile library")
        out.append(f"NAME  {p.name}")
        if p.accession:
            out.append(f"ACC   {p.accession}")
        if p.description:
            out.append(f"DESC  {p.description}")
        out.append(f"LENG  {p.model_length}")
        out.append("ALPH  amino")
        out.append("HMM   " + "  ".join(RESIDUE_ORDER))
        out.append("      " + "  ".join(t.lower()[0] + "->" + t.lower()[1] for t in TRANSITION_ORDER))
        out.append("  COMPO  " + "  ".join(_fmt(-math.log(f)) for f in p.background))
        for k in range(p.model_length):
            out.append(f"  {k + 1}  " + "  ".join(_fmt(v) for v in p.match_emissions[k]))
            out.append("     " + "  ".join(_fmt(v) for v in p.insert_emissions[k]))
            out.append("     " + "  ".join(_fmt(v) for v in p.transitions[k]))
        out.append("//")
    return "\n".join(out) + ("\n" if out else "")


def _log_odds_tables(hmm: ProfileHmm):
    """Per-node log2(emission/background) score rows; X scores 0."""
    bg = hmm.background
    match_scores = []
    insert_scores = []
    for k in range(hmm.model_length):
        m_row, i_row = {}, {}
        for idx, res in enumerate(RESIDUE_ORDER):
            em = hmm.match_emissions[k][idx]
            m_row[res] = -math.inf if math.isinf(em) else (-em - math.log(bg[idx])) / _LN2
            ei = hmm.insert_emissions[k][idx]
            i_row[res] = -math.inf if math.isinf(ei) else (-ei - math.log(bg[idx])) / _LN2
        m_row["X"] = 0.0
        i_row["X"] = 0.0
        match_scores.append(m_row)
        insert_scores.append(i_row)
    trans_scores = [
        tuple(-math.inf if math.isinf(v) else -v / _LN2 for v in row) for row in hmm.transitions
    ]
    return match_scores, insert_scores, trans_scores


def viterbi_score(hmm: ProfileHmm, seq: Sequence):
    """Best local path through the profile, scored in bits over background.

    A path enters at any match state and exits from any match state (free
    entry/exit), may pass through insert and delete states in between, and
    must score above zero to count. Returns (bits, hmm_from, hmm_to,
    ali_from, ali_to) or None for no hit. Ties break on smallest ali_from.
    """
    match_s, insert_s, trans_s = _log_odds_tables(hmm)
    res = seq.residues
    L, n = hmm.model_length, len(res)
    neg = -math.inf
    MM, MI, MD, IM, II, DM, DD = range(7)

    # Cells carry (score, ali_from, hmm_from); comparisons maximize score
    # and on ties minimize ali_from then hmm_from.
    dead = (neg, 0, 0)

    def better(x, y):
        if x[0] != y[0]:
            return x if x[0] > y[0] else y
        return x if (x[1], x[2]) <= (y[1], y[2]) else y

    vm_prev = [dead] * (L + 1)
    vi_prev = [dead] * (L + 1)
    vd_prev = [dead] * (L + 1)
    best = dead
    best_end = None
    for j in range(1, n + 1):
        c = res[j - 1]
        vm = [dead] * (L + 1)
        vi = [dead] * (L + 1)
        vd = [dead] * (L + 1)
        for k in range(1, L + 1):
            em = match_s[k - 1][c]
            cand = (0.0, j, k)  # fresh entry at M_k
            if k > 1:
                t = trans_s[k - 2]
                prev = vm_prev[k - 1]
                if prev[0] > neg and t[MM] > neg:
                    cand = better(cand, (prev[0] + t[MM], prev[1], prev[2]))
                prev = vi_prev[k - 1]
                if prev[0] > neg and t[IM] > neg:
                    cand = better(cand, (prev[0] + t[IM], prev[1], prev[2]))
                prev = vd_prev[k - 1]
                if prev[0] > neg and t[DM] > neg:
                    cand = better(cand, (prev[0] + t[DM], prev[1], prev[2]))
            if em > neg:
                vm[k] = (cand[0] + em, cand[1], cand[2])
                if (
                    best_end is None
                    or vm[k][0] > best[0]
                    or (vm[k][0] == best[0] and (vm[k][1], vm[k][2]) < (best[1], best[2]))
                ):
                    best = vm[k]
                    best_end = (k, j)
            # insert state I_k (emits, stays at node k)
            ei = insert_s[k - 1][c]
            t = trans_s[k - 1]
            ic = dead
            prev = vm_prev[k]
            if prev[0] > neg and t[MI] > neg:
                ic = better(ic, (prev[0] + t[MI], prev[1], prev[2]))
            prev = vi_prev[k]
            if prev[0] > neg and t[II] > neg:
                ic = better(ic, (prev[0] + t[II], prev[1], prev[2]))
            if ic[0] > neg and ei > neg:
                vi[k] = (ic[0] + ei, ic[1], ic[2])
            # delete state D_k (silent, same j)
            if k > 1:
                t = trans_s[k - 2]
                dc = dead
                prev = vm[k - 1]
                if prev[0] > neg and t[MD] > neg:
                    dc = better(dc, (prev[0] + t[MD], prev[1], prev[2]))
                prev = vd[k - 1]
                if prev[0] > neg and t[DD] > neg:
                    dc = better(dc, (prev[0] + t[DD], prev[1], prev[2]))
                vd[k] = dc
        vm_prev, vi_prev, vd_prev = vm, vi, vd

    if best_end is None or best[0] <= 0.0:
        return None
    hmm_to, ali_to = best_end
    return (best[0], best[2], hmm_to, best[1], ali_to)


def select_domains(
    hits: list[DomainHit], selection_threshold: float = DEFAULT_SELECTION_THRESHOLD
) -> list[DomainHit]:
    """Greedy non-overlapping selection in E-value order.

    Scans hits in ascending-E order, keeps those at or below the threshold
    that do not overlap an already-selected hit on sequence coordinates.
    """
    ordered = sorted(hits, key=lambda h: (h.evalue, -h.score, h.pfam_acc))
    selected: list[DomainHit] = []
    for hit in ordered:
        if hit.evalue > selection_threshold:
            continue
        if any(hit.ali_from <= s.ali_to and s.ali_from <= hit.ali_to for s in selected):
            continue
        selected.append(hit)
    return selected


def scan(
    library: list[ProfileHmm],
    seq: Sequence,
    report_threshold: float = DEFAULT_REPORT_THRESHOLD,
    selection_threshold: float = DEFAULT_SELECTION_THRESHOLD,
) -> DomainScanResult:
    """Score every profile and assemble the ranked hit list.

    E = N_models * max(1, len/100) * 2^(-bits); hits above the report
    threshold are dropped.
    """
    if not library:
        raise EmptyLibraryError("domain scan with an empty profile library")
    length_factor = max(1.0, seq.length / 100.0)
    hits: list[DomainHit] = []
    for hmm in library:
        result = viterbi_score(hmm, seq)
        if result is None:
            continue
        bits, hmm_from, hmm_to, ali_from, ali_to = result
        evalue = len(library) * length_factor * (2.0 ** (-bits))
        if evalue > report_threshold:
            continue
        hits.append(
            DomainHit(
                pfam_id=hmm.name,
                pfam_acc=hmm.accession,
                query=seq.id,
                evalue=float(f"{evalue:.4g}"),
                score=round(bits, 1),
                hmm_from=hmm_from,
                hmm_to=hmm_to,
                ali_from=ali_from,
                ali_to=ali_to,
                coverage_query=round((ali_to - ali_from + 1) / seq.length, 4),
                desc=hmm.description,
            )
        )
    hits.sort(key=lambda h: (h.evalue, -h.score, h.pfam_acc))
    return DomainScanResult(
        hits=tuple(hits),
        selected_domains=tuple(select_domains(hits, selection_threshold)),
    )
