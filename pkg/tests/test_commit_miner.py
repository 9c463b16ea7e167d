import io
import json
from datetime import datetime, timezone

import pytest

from src.data_collection.commit_miner import (
    CommitClass,
    FilterListDiff,
    Label,
    MiningStats,
    classify_commit,
    commit_diff,
    extract_urls,
    invert,
    mine_examples,
    parse_commit_log,
    read_examples_jsonl,
    write_examples_jsonl,
)
from src.errors import MalformedRecord

MEALTY_RULE = "@@||mealty.ru/js/ga_events.js$~third-party"


def parse(*records):
    return parse_commit_log(io.StringIO("".join(json.dumps(r) + "\n" for r in records)))


def test_parse_commit_log(fix_commit):
    [commit] = parse(fix_commit)
    assert commit.id == "a509c21b"
    assert commit.message.startswith("P: https://www.mealty.ru/catalog/")
    assert commit.timestamp == datetime(2020, 6, 11, 8, 15, tzinfo=timezone.utc)
    assert len(commit.file_changes) == 1
    assert commit.file_changes[0].added_lines == (MEALTY_RULE,)


def test_parse_empty_stream():
    assert parse_commit_log(io.StringIO("")) == []
    assert parse_commit_log(io.StringIO("\n\n")) == []


@pytest.mark.parametrize("line", [
    '{"id": "x", "timestamp": "2020-01-01T00:00:00Z", "files": []}',
    '{"id": "x", "timestamp": "01/01/2020", "message": "P: x", "files": []}',
    '{"id": "x", "timestamp": "2020-01-01T00:00:00Z", "message": "P: x", '
    '"files": [{"path": "a.txt", "added": [1]}]}',
    '["not", "an", "object"]',
    '{"id": ',
])
def test_malformed_records_report_line_number(line):
    stream = io.StringIO('{"id": "ok", "timestamp": "2020-01-01T00:00:00Z", '
                         '"message": "M: ok", "files": []}\n' + line + "\n")
    with pytest.raises(MalformedRecord) as info:
        parse_commit_log(stream)
    assert info.value.line_no == 2


def test_classify_commits(fix_commit, coverage_commit):
    fix, coverage = parse(fix_commit, coverage_commit)
    assert classify_commit(fix) is CommitClass.FIX
    assert classify_commit(coverage) is CommitClass.COVERAGE
    [other] = parse({**fix_commit, "message": "M: maintenance"})
    assert classify_commit(other) is CommitClass.OTHER


def test_extract_urls_ignores_forum_reference(fix_commit):
    assert extract_urls(fix_commit["message"]) == ["https://www.mealty.ru/catalog/"]


def test_extract_urls_first_line_only(coverage_commit):
    assert extract_urls(coverage_commit["message"]) == ["https://tinyzonetv.to/"]


def test_extract_urls_without_url():
    assert extract_urls("P: broken again") == []


def test_extract_urls_several_and_inline_reference():
    message = ("P: https://a.com/, https://b.org/page (Fixes https://forums.lanik.us/t=1) "
               "https://a.com/")
    assert extract_urls(message) == ["https://a.com/", "https://b.org/page"]


def test_invert_swaps_additions_and_removals():
    diff = FilterListDiff(added=("r",))
    assert invert(diff) == FilterListDiff(removed=("r",))
    assert invert(FilterListDiff()) == FilterListDiff()


def test_invert_is_an_involution():
    diff = FilterListDiff(added=("a", "b"), removed=("c",))
    assert invert(invert(diff)) == diff


def test_commit_diff_cancels_moved_lines():
    [commit] = parse({
        "id": "m", "timestamp": "2020-01-01T00:00:00Z", "message": "P: https://x.com/",
        "files": [
            {"path": "a.txt", "added": ["||moved.com^", "||new.com^"], "removed": []},
            {"path": "b.txt", "added": [], "removed": ["||moved.com^", "||old.com^"]},
        ],
    })
    assert commit_diff(commit) == FilterListDiff(added=("||new.com^",), removed=("||old.com^",))


def test_fix_commit_yields_broken_example_with_inverted_diff(fix_commit):
    [example] = mine_examples(parse(fix_commit))
    assert example.label is Label.BROKEN
    assert example.page_url == "https://www.mealty.ru/catalog/"
    assert example.diff == FilterListDiff(removed=(MEALTY_RULE,))
    assert example.example_id == "a509c21b-0"
    assert example.source_commit == "a509c21b"


def test_coverage_commit_yields_working_example(coverage_commit):
    [example] = mine_examples(parse(coverage_commit))
    assert example.label is Label.WORKING
    assert example.diff == FilterListDiff(added=("||sfzover.com^",))


def test_old_commits_are_skipped(fix_commit):
    stats = MiningStats()
    examples = mine_examples(parse({**fix_commit, "timestamp": "2012-05-01T00:00:00Z"}),
                             stats=stats)
    assert examples == []
    assert stats.skipped["too_old"] == 1


def test_since_is_configurable(fix_commit, coverage_commit):
    since = datetime(2021, 1, 1, tzinfo=timezone.utc)
    examples = mine_examples(parse(fix_commit, coverage_commit), since=since)
    assert [e.label for e in examples] == [Label.WORKING]


def test_skipped_commits_are_counted(fix_commit):
    stats = MiningStats()
    commits = parse(
        {**fix_commit, "id": "both", "message": "P: https://a.com/\nA: https://b.com/"},
        {**fix_commit, "id": "nourl", "message": "P: broken again"},
        {**fix_commit, "id": "empty", "files": []},
        {**fix_commit, "id": "cosmetic",
         "files": [{"path": "a.txt", "added": ["mealty.ru##.banner"], "removed": []}]},
        {**fix_commit, "id": "other", "message": "M: sort"},
    )
    assert mine_examples(commits, stats=stats) == []
    assert stats.commits == 5
    assert dict(stats.skipped) == {"both_tagged": 1, "no_url": 1, "empty_diff": 1,
                                   "cosmetic_only": 1}
    assert stats.by_class == {"fix": 4, "other": 1}
    counts = stats.as_counts()
    assert counts["skipped_no_url"] == 1
    assert counts["examples"] == 0


def test_one_example_per_url(fix_commit):
    commit = {**fix_commit, "message": "P: https://a.com/ https://b.com/"}
    examples = mine_examples(parse(commit))
    assert [e.example_id for e in examples] == ["a509c21b-0", "a509c21b-1"]
    assert [e.page_url for e in examples] == ["https://a.com/", "https://b.com/"]


def test_examples_jsonl_round_trip(fix_commit, coverage_commit):
    examples = mine_examples(parse(fix_commit, coverage_commit))
    buffer = io.StringIO()
    write_examples_jsonl(examples, buffer)
    buffer.seek(0)
    assert read_examples_jsonl(buffer) == examples


def test_read_examples_rejects_bad_label():
    row = {"example_id": "x", "page_url": "https://a.com/", "label": "flaky",
           "diff": {"added": [], "removed": []}}
    with pytest.raises(MalformedRecord):
        read_examples_jsonl(io.StringIO(json.dumps(row) + "\n"))
