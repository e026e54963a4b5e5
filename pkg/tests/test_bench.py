import re

import pytest

from healthbroker import bench
from healthbroker.bench import BenchReport, format_report, generate_xml_payload, run_bench
from healthbroker.config import ApiConfig

from conftest import LEVEL


def test_payload_exact_size_and_well_formed():
    for size in (128, 1024, 10 * 1024):
        payload = generate_xml_payload(size)
        assert len(payload) == size
        assert payload.startswith(b'<?xml version="1.0"?>')
        assert payload.endswith(b"</data></record>")
    with pytest.raises(ValueError):
        generate_xml_payload(10)


def test_payloads_differ_per_call():
    assert generate_xml_payload(512) != generate_xml_payload(512)


def test_report_structure_checks():
    report = BenchReport()
    for size, t in zip(["1k", "10k", "100k"], [0.01, 0.02, 0.05]):
        report.add(size, "split", [t, t])
        report.add(size, "encrypt", [0.02, 0.02])
        report.add(size, "upload", [t, t])
    assert report.check_structure(["1k", "10k", "100k"]) == []
    # non-monotone split times must be flagged
    bad = BenchReport()
    for size, t in zip(["1k", "10k"], [0.05, 0.01]):
        bad.add(size, "split", [t])
        bad.add(size, "encrypt", [0.02])
    failures = bad.check_structure(["1k", "10k"])
    assert len(failures) == 1 and "not strictly increasing" in failures[0]
    # encrypt times spreading by 5x or more must be flagged
    skew = BenchReport()
    for size, enc in zip(["1k", "10k"], [0.01, 0.06]):
        skew.add(size, "split", [0.01 if size == "1k" else 0.02])
        skew.add(size, "encrypt", [enc])
    assert any("encrypt time ratio" in f for f in skew.check_structure(["1k", "10k"]))


def test_run_bench_parameter_validation():
    with pytest.raises(ValueError):
        run_bench(reps=2)
    with pytest.raises(ValueError):
        run_bench(sizes=["7k"])


@pytest.fixture(scope="module")
def small_report():
    config = ApiConfig(security_level=LEVEL, test_seed="bench-test")
    return run_bench(config, sizes=["1k", "10k", "100k"], reps=5)


def test_run_bench_rows_complete(small_report):
    sizes = {"1k", "10k", "100k"}
    ops = {"split", "encrypt", "upload"}
    seen = {(r["size"], r["operation"]) for r in small_report.rows}
    assert seen == {(s, o) for s in sizes for o in ops}
    assert all(r["reps"] == 5 and r["avg_s"] > 0 for r in small_report.rows)
    assert set(small_report.single) == {"revoke_user", "revoke_attribute", "policy_update"}
    assert all(v > 0 for v in small_report.single.values())


def test_formatted_report(small_report):
    text = format_report(small_report, ["1k", "10k", "100k"])
    assert re.search(r"File Size\s+split avg\(s\)", text)
    for label in ("1K", "10K", "100K", "revoke_user", "policy_update"):
        assert label in text
    # reference figures are labelled as context, not as expectations
    assert "not reproducible here" in text


def test_write_jsonl(small_report, tmp_path):
    import json

    path = tmp_path / "bench.jsonl"
    bench.write_jsonl(small_report, str(path))
    lines = [json.loads(l) for l in path.read_text().splitlines()]
    assert len(lines) == len(small_report.rows) + len(small_report.single)
    assert all("operation" in l for l in lines)
