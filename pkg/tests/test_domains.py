import math
import random

import pytest

from conftest import data_path
from oracles import brute_viterbi_bits, random_profile
from protagent.domains import (
    DomainHit,
    ProfileHmm,
    parse_hmm_library,
    scan,
    select_domains,
    viterbi_score,
    write_hmm_library,
)
from protagent.errors import (
    EmptyLibraryError,
    MalformedProfileError,
    ProfileParseError,
    TruncatedProfileError,
)
from protagent.seq import CANONICAL_RESIDUES, Sequence


def seq(res: str, sid: str = "t") -> Sequence:
    return Sequence(id=sid, residues=res)


def library_text() -> str:
    with open(data_path("toy.hmm"), encoding="utf-8") as fh:
        return fh.read()


# --- parsing ----------------------------------------------------------------


def test_parse_bundled_library(hmm_library):
    assert [p.name for p in hmm_library] == ["MscL", "ToyDom1", "ToyDom2", "ToyDom3", "ToyDom4"]
    assert hmm_library[0].accession == "PF01741.24"
    assert hmm_library[0].model_length == 117


def test_serialize_parse_is_identity_on_bundled_library(hmm_library):
    text = library_text()
    assert write_hmm_library(parse_hmm_library(text)) == text
    assert parse_hmm_library(write_hmm_library(hmm_library)) == hmm_library


def test_parse_rejects_missing_leng():
    text = "HMMER3/f x\nNAME  A\nHMM  ...\n     ...\n//\n"
    with pytest.raises(MalformedProfileError):
        parse_hmm_library(text)


def test_parse_rejects_missing_terminator():
    text = library_text()
    truncated = text[: text.rindex("//")]
    with pytest.raises(ProfileParseError):
        parse_hmm_library(truncated)


def test_parse_rejects_wrong_row_count():
    text = library_text()
    lines = text.splitlines()
    # drop the last node block (three lines before the final '//')
    del lines[-4:-1]
    with pytest.raises((TruncatedProfileError, ProfileParseError)):
        parse_hmm_library("\n".join(lines) + "\n")


def test_parse_rejects_non_numeric_value():
    text = library_text().replace("0.", "q.", 1)
    with pytest.raises(ProfileParseError):
        parse_hmm_library(text)


def test_parse_rejects_junk_header():
    with pytest.raises(ProfileParseError):
        parse_hmm_library("WHAT IS THIS\n")


def test_profile_validates_emission_normalization():
    rng = random.Random(1)
    p = random_profile(rng, "P", 2)
    bad_rows = (p.match_emissions[0], tuple(v + 0.5 for v in p.match_emissions[1]))
    with pytest.raises(MalformedProfileError):
        ProfileHmm(
            name="P",
            accession="PF1.1",
            description="",
            model_length=2,
            match_emissions=bad_rows,
            insert_emissions=p.insert_emissions,
            transitions=p.transitions,
        )


def test_star_means_probability_zero():
    text = library_text()
    profiles = parse_hmm_library(text)
    rewritten = write_hmm_library(profiles)
    if "*" in rewritten.split("\n", 10)[-1]:
        assert any(math.isinf(v) for p in profiles for row in p.transitions for v in row)


def test_round_trip_random_profiles():
    rng = random.Random(5)
    profiles = [random_profile(rng, f"R{i}", rng.randint(1, 6)) for i in range(4)]
    text = write_hmm_library(profiles)
    fixed_point = parse_hmm_library(text)
    assert write_hmm_library(fixed_point) == text


# --- scoring ----------------------------------------------------------------


def test_viterbi_matches_brute_force_small():
    rng = random.Random(11)
    for trial in range(40):
        hmm = random_profile(rng, f"V{trial}", rng.randint(1, 3))
        res = "".join(rng.choice(CANONICAL_RESIDUES) for _ in range(rng.randint(1, 4)))
        got = viterbi_score(hmm, seq(res))
        expected = brute_viterbi_bits(hmm, res)
        if expected is None:
            assert got is None
        else:
            assert got is not None
            assert got[0] == pytest.approx(expected, abs=1e-9)


def test_viterbi_reports_consistent_coordinates():
    rng = random.Random(13)
    for trial in range(30):
        hmm = random_profile(rng, f"C{trial}", rng.randint(2, 6))
        res = "".join(rng.choice(CANONICAL_RESIDUES) for _ in range(rng.randint(3, 12)))
        got = viterbi_score(hmm, seq(res))
        if got is None:
            continue
        bits, hmm_from, hmm_to, ali_from, ali_to = got
        assert bits > 0
        assert 1 <= hmm_from <= hmm_to <= hmm.model_length
        assert 1 <= ali_from <= ali_to <= len(res)


def test_x_scores_zero_log_odds():
    rng = random.Random(17)
    hmm = random_profile(rng, "XP", 1)
    got = viterbi_score(hmm, seq("X"))
    assert got is None  # a single X entry scores exactly 0, not above


# --- selection and scan -----------------------------------------------------


def hit(acc, ev, score_, ali_from, ali_to):
    return DomainHit(
        pfam_id=acc,
        pfam_acc=acc,
        query="q",
        evalue=ev,
        score=score_,
        hmm_from=1,
        hmm_to=5,
        ali_from=ali_from,
        ali_to=ali_to,
        coverage_query=0.1,
        desc="",
    )


def test_select_threshold_and_overlap():
    hits = [
        hit("PF1", 1e-10, 50.0, 10, 40),
        hit("PF2", 1e-4, 20.0, 30, 60),  # overlaps PF1
        hit("PF3", 1e-3, 15.0, 70, 90),  # disjoint, under threshold
        hit("PF4", 0.5, 5.0, 100, 120),  # over threshold
    ]
    selected = select_domains(hits)
    assert [h.pfam_acc for h in selected] == ["PF1", "PF3"]


def test_select_ties_break_on_accession():
    hits = [hit("PF9", 1e-5, 10.0, 1, 5), hit("PF2", 1e-5, 10.0, 1, 5)]
    assert select_domains(hits)[0].pfam_acc == "PF2"


def test_scan_empty_library_rejected(mscl_seq):
    with pytest.raises(EmptyLibraryError):
        scan([], mscl_seq)


def test_scan_bundled_library_on_channel_sequence(hmm_library, mscl_seq):
    result = scan(hmm_library, mscl_seq)
    assert [h.pfam_id for h in result.hits] == ["MscL", "ToyDom4", "ToyDom2", "ToyDom1", "ToyDom3"]
    assert [h.pfam_id for h in result.selected_domains] == ["MscL"]
    top = result.hits[0]
    assert top.score == 473.1
    assert top.evalue == pytest.approx(2.183e-142)
    assert top.query == "query"
    assert 0 < top.coverage_query <= 1.0


def test_scan_payload_keys(hmm_library, mscl_seq):
    payload = scan(hmm_library, mscl_seq).to_payload()
    assert set(payload) == {"hits", "selected_domains"}
    assert set(payload["hits"][0]) == {
        "pfam_id", "pfam_acc", "query", "evalue", "score",
        "hmm_from", "hmm_to", "ali_from", "ali_to", "coverage_query", "desc",
    }


def test_scan_evalue_ordering(hmm_library, mscl_seq):
    result = scan(hmm_library, mscl_seq)
    evs = [h.evalue for h in result.hits]
    assert evs == sorted(evs)
    assert all(ev <= 1.0 for ev in evs)
