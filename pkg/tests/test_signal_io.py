import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecghf.errors import DataFormatError, DomainError, InsufficientDataError
from ecghf.signal_io import (CHANNEL_NAMES, LEAD_ORDER, EcgRecord, derive_leads,
                             extract_fragments, load_record, write_fragment_manifest,
                             write_record)

from conftest import make_record


def write_csv(path, header, rows, rate=1028, extra_comments=()):
    lines = [f"# rate={rate}", *extra_comments, ",".join(header)]
    lines += [",".join(str(c) for c in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def test_load_minimal_csv(tmp_path):
    rows = [[float(i + j) for j in range(8)] for i in range(4)]
    path = write_csv(tmp_path / "r.csv", CHANNEL_NAMES, rows)
    record = load_record(path)
    assert record.n_samples == 4
    assert record.sampling_rate == 1028
    assert record.subject_id == "r"
    np.testing.assert_array_equal(record.channels["L"], [0.0, 1.0, 2.0, 3.0])
    np.testing.assert_array_equal(record.channels["C6"], [7.0, 8.0, 9.0, 10.0])


def test_load_header_order_resolved(tmp_path):
    header = list(CHANNEL_NAMES[::-1])
    rows = [[float(j) for j in range(8)]]
    record = load_record(write_csv(tmp_path / "r.csv", header, rows))
    assert record.channels["C6"][0] == 0.0
    assert record.channels["L"][0] == 7.0


def test_load_metadata_comments(tmp_path):
    path = write_csv(tmp_path / "x.csv", CHANNEL_NAMES, [[0.0] * 8],
                     extra_comments=("# subject=p7", "# label=sick"))
    record = load_record(path)
    assert record.subject_id == "p7"
    assert record.group_label == "sick"


def test_missing_channel_named(tmp_path):
    header = [c for c in CHANNEL_NAMES if c != "C6"]
    path = write_csv(tmp_path / "r.csv", header, [[0.0] * 7])
    with pytest.raises(DataFormatError, match="missing channel C6"):
        load_record(path)


def test_ragged_row_is_length_mismatch(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("# rate=100\n" + ",".join(CHANNEL_NAMES) + "\n"
                    + ",".join(["0.0"] * 8) + "\n" + ",".join(["0.0"] * 7) + "\n")
    with pytest.raises(DataFormatError, match="length mismatch"):
        load_record(path)


def test_non_numeric_cell_reports_row(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("# rate=100\n" + ",".join(CHANNEL_NAMES) + "\n"
                    + ",".join(["0.0"] * 8) + "\n"
                    + "abc," + ",".join(["0.0"] * 7) + "\n")
    with pytest.raises(DataFormatError, match="line 4.*'abc'"):
        load_record(path)


def test_missing_rate_line(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text(",".join(CHANNEL_NAMES) + "\n" + ",".join(["1"] * 8) + "\n")
    with pytest.raises(DataFormatError, match="rate"):
        load_record(path)


def test_missing_file_raises_oserror():
    with pytest.raises(FileNotFoundError):
        load_record("/nonexistent/record.csv")


def test_record_roundtrip(tmp_path, rng):
    record = make_record(n=16, label="healthy", rng=rng)
    write_record(record, tmp_path / "out.csv")
    back = load_record(tmp_path / "out.csv")
    assert back.subject_id == record.subject_id
    assert back.group_label == "healthy"
    for name in CHANNEL_NAMES:
        np.testing.assert_array_equal(back.channels[name], record.channels[name])


def test_record_invariants():
    with pytest.raises(DataFormatError, match="unexpected channel"):
        make_record(channels={**{c: [0.0] for c in CHANNEL_NAMES}, "X": [0.0]})
    with pytest.raises(DataFormatError, match="length mismatch"):
        make_record(channels={c: [0.0] * (2 if c == "L" else 3) for c in CHANNEL_NAMES})
    with pytest.raises(DataFormatError, match="positive integer"):
        make_record(rate=0, n=2)


def test_derive_leads_printed_formulas():
    channels = {"L": [1.0], "F": [2.0]}
    channels.update({f"C{i}": [0.0] for i in range(1, 7)})
    leads = derive_leads(make_record(channels=channels)).leads
    assert leads["I"][0] == 1.0
    assert leads["II"][0] == 2.0
    assert leads["III"][0] == 1.0
    assert leads["aVR"][0] == -1.5
    assert leads["aVL"][0] == 0.0
    assert leads["aVF"][0] == 1.5
    for i in range(1, 7):
        assert leads[f"V{i}"][0] == -1.0


def test_derive_leads_zero_record():
    leads = derive_leads(make_record(channels={c: np.zeros(5) for c in CHANNEL_NAMES}))
    for name in LEAD_ORDER:
        assert not np.any(leads.leads[name])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-3, 3))
def test_lead_algebra_identities(seed, log_scale):
    rng = np.random.default_rng(seed)
    channels = {c: 10.0 ** log_scale * rng.standard_normal(32)
                for c in CHANNEL_NAMES}
    leads = derive_leads(make_record(channels=channels)).leads
    third = leads["II"] - leads["I"]
    np.testing.assert_array_equal(leads["III"], third)
    s = leads["aVR"] + leads["aVL"] + leads["aVF"]
    bound = 4 * np.spacing(np.maximum.reduce(
        [np.abs(leads["aVR"]), np.abs(leads["aVL"]), np.abs(leads["aVF"])]))
    assert np.all(np.abs(s) <= bound + np.finfo(float).tiny)


def test_derive_leads_linearity(rng):
    r1 = make_record(n=64, rng=rng)
    r2 = make_record(n=64, rng=rng)
    a, b = 2.5, -1.25
    mixed = make_record(channels={c: a * r1.channels[c] + b * r2.channels[c]
                                  for c in CHANNEL_NAMES})
    l1 = derive_leads(r1).leads
    l2 = derive_leads(r2).leads
    lm = derive_leads(mixed).leads
    for name in LEAD_ORDER:
        np.testing.assert_allclose(lm[name], a * l1[name] + b * l2[name],
                                   rtol=0, atol=1e-12)


def test_extract_fragments_paper_protocol(rng):
    record = make_record(n=30 * 1028, rng=rng)
    fragments = extract_fragments(derive_leads(record), 8.0, 2)
    assert len(fragments) == 24
    assert all(len(f.samples) == 8224 for f in fragments)
    assert {f.lead_name for f in fragments} == set(LEAD_ORDER)
    by_lead = [f for f in fragments if f.lead_name == "V3"]
    assert [f.fragment_index for f in by_lead] == [0, 1]


def test_extract_fragments_count_zero(rng):
    assert extract_fragments(derive_leads(make_record(n=100, rng=rng)), 8.0, 0) == []


def test_extract_fragments_too_short(rng):
    record = make_record(n=10 * 1028, rng=rng)
    with pytest.raises(InsufficientDataError, match="16448.*10280"):
        extract_fragments(derive_leads(record), 8.0, 2)


def test_extract_fragments_non_integer_length(rng):
    record = make_record(n=1000, rate=300, rng=rng)
    with pytest.raises(DomainError, match="whole number"):
        extract_fragments(derive_leads(record), 1.0005, 1)


def test_fragments_disjoint_and_exact(rng):
    record = make_record(n=100, rate=10, rng=rng)
    leads = derive_leads(record)
    fragments = [f for f in extract_fragments(leads, 2.0, 3) if f.lead_name == "I"]
    assert [len(f.samples) for f in fragments] == [20, 20, 20]
    joined = np.concatenate([f.samples for f in fragments])
    np.testing.assert_array_equal(joined, leads.leads["I"][:60])


def test_fragment_manifest(tmp_path, rng):
    record = make_record(n=40, rate=10, rng=rng, subject="s9")
    fragments = extract_fragments(derive_leads(record), 2.0, 2)
    write_fragment_manifest(fragments, tmp_path / "m.csv")
    lines = (tmp_path / "m.csv").read_text().strip().split("\n")
    assert lines[0] == "subject_id,lead,fragment_index,start_sample,length"
    assert lines[1] == "s9,I,0,0,20"
    assert len(lines) == 1 + 24
