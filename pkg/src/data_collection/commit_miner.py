"""
Extraction d'exemples étiquetés depuis l'historique d'une liste de filtres
Source: journal de commits pré-exporté en JSONL (un commit par ligne)

Conventions des mainteneurs :
  - "P:" → correctif de compatibilité (la page était cassée)
  - "A:" → extension de couverture (blocage voulu, la page fonctionne)

Les correctifs sont inversés (ajouts ↔ suppressions) : le diff obtenu
CASSE la page, c'est l'exemple positif.
"""

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

from src.errors import MalformedRecord
from src.filtering.filter_engine import is_cosmetic

logger = logging.getLogger(__name__)

DEFAULT_SINCE = datetime(2013, 1, 1, tzinfo=timezone.utc)
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"

FIX_PREFIX = "P:"
COVERAGE_PREFIX = "A:"

URL_REGEXP = re.compile(r'https?://[^\s()<>"\']+')
# "(Fixes https://forums…)" - parenthèse parfois non fermée sur la 1re ligne
FORUM_REFERENCE_REGEXP = re.compile(r'\(\s*Fixes\b[^)]*\)?', flags=re.I)


class CommitClass(str, Enum):
    FIX = "fix"
    COVERAGE = "coverage"
    OTHER = "other"


class Label(str, Enum):
    BROKEN = "broken"
    WORKING = "working"


@dataclass(frozen=True)
class FileChange:
    path: str
    added_lines: tuple = ()
    removed_lines: tuple = ()


@dataclass(frozen=True)
class CommitRecord:
    id: str
    timestamp: datetime
    message: str
    file_changes: tuple = ()


@dataclass(frozen=True)
class FilterListDiff:
    added: tuple = ()
    removed: tuple = ()

    def is_empty(self):
        return not self.added and not self.removed

    def to_dict(self):
        return {"added": list(self.added), "removed": list(self.removed)}

    @classmethod
    def from_dict(cls, data):
        return cls(added=tuple(data.get("added", ())), removed=tuple(data.get("removed", ())))


@dataclass(frozen=True)
class LabeledExample:
    example_id: str
    page_url: str
    diff: FilterListDiff
    label: Label
    source_commit: str

    def to_dict(self):
        return {
            "example_id": self.example_id,
            "page_url": self.page_url,
            "label": self.label.value,
            "diff": self.diff.to_dict(),
            "source_commit": self.source_commit,
        }


@dataclass
class MiningStats:
    commits: int = 0
    by_class: Counter = field(default_factory=Counter)
    skipped: Counter = field(default_factory=Counter)
    examples: int = 0

    def as_counts(self):
        counts = {"commits": self.commits, "examples": self.examples}
        counts.update({f"class_{k}": v for k, v in sorted(self.by_class.items())})
        counts.update({f"skipped_{k}": v for k, v in sorted(self.skipped.items())})
        return counts


def _require(record, key, kind, line_no):
    if key not in record:
        raise MalformedRecord(f'missing "{key}" field', line_no)
    value = record[key]
    if not isinstance(value, kind):
        raise MalformedRecord(f'"{key}" must be {kind.__name__}', line_no)
    return value


def _string_list(values, key, line_no):
    if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
        raise MalformedRecord(f'"{key}" must be a list of strings', line_no)
    return tuple(values)


def _parse_record(line, line_no):
    try:
        record = json.loads(line)
    except json.JSONDecodeError as e:
        raise MalformedRecord(f"invalid JSON ({e.msg})", line_no) from e
    if not isinstance(record, dict):
        raise MalformedRecord("record must be an object", line_no)

    commit_id = _require(record, "id", str, line_no)
    raw_ts = _require(record, "timestamp", str, line_no)
    message = _require(record, "message", str, line_no)
    files = _require(record, "files", list, line_no)

    try:
        timestamp = datetime.strptime(raw_ts, TIMESTAMP_FORMAT).replace(tzinfo=timezone.utc)
    except ValueError as e:
        raise MalformedRecord(f'bad timestamp "{raw_ts}"', line_no) from e

    changes = []
    for entry in files:
        if not isinstance(entry, dict):
            raise MalformedRecord("file entry must be an object", line_no)
        changes.append(FileChange(
            path=_require(entry, "path", str, line_no),
            added_lines=_string_list(entry.get("added", []), "added", line_no),
            removed_lines=_string_list(entry.get("removed", []), "removed", line_no),
        ))
    return CommitRecord(id=commit_id, timestamp=timestamp, message=message,
                        file_changes=tuple(changes))


def parse_commit_log(stream):
    """
    Lit un journal JSONL ; une ligne vide est ignorée.

    Raises:
        MalformedRecord: avec le numéro de ligne (1-indexé)
    """
    commits = []
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        commits.append(_parse_record(line, line_no))
    return commits


def classify_commit(commit):
    message = commit.message.lstrip()
    if message.startswith(FIX_PREFIX):
        return CommitClass.FIX
    if message.startswith(COVERAGE_PREFIX):
        return CommitClass.COVERAGE
    return CommitClass.OTHER


def _is_tagged_both_ways(commit, commit_class):
    other_prefix = COVERAGE_PREFIX if commit_class is CommitClass.FIX else FIX_PREFIX
    return any(line.lstrip().startswith(other_prefix)
               for line in commit.message.splitlines())


def extract_urls(message):
    """URLs http(s) de la première ligne, hors références "(Fixes …)"."""
    first_line = message.lstrip().split("\n", 1)[0]
    first_line = FORUM_REFERENCE_REGEXP.sub(" ", first_line)
    urls = []
    for match in URL_REGEXP.finditer(first_line):
        url = match.group(0).rstrip(".,;:!?")
        if url not in urls:
            urls.append(url)
    return urls


def commit_diff(commit):
    """Fusionne les fichiers ; une ligne ajoutée et retirée (déplacement) s'annule."""
    added = [line for change in commit.file_changes for line in change.added_lines]
    removed = [line for change in commit.file_changes for line in change.removed_lines]
    moved = set(added) & set(removed)
    return FilterListDiff(
        added=tuple(dict.fromkeys(line for line in added if line not in moved)),
        removed=tuple(dict.fromkeys(line for line in removed if line not in moved)),
    )


def invert(diff):
    return FilterListDiff(added=diff.removed, removed=diff.added)


def mine_examples(commits, since=DEFAULT_SINCE, stats=None):
    """
    Transforme les commits en exemples étiquetés.

    - fix (P:)      → label broken, diff inversé
    - coverage (A:) → label working, diff d'origine
    Un exemple par URL de la première ligne.
    """
    stats = stats if stats is not None else MiningStats()
    examples = []

    for commit in commits:
        stats.commits += 1
        commit_class = classify_commit(commit)
        stats.by_class[commit_class.value] += 1
        if commit_class is CommitClass.OTHER:
            continue
        if commit.timestamp < since:
            stats.skipped["too_old"] += 1
            continue
        if _is_tagged_both_ways(commit, commit_class):
            stats.skipped["both_tagged"] += 1
            continue

        urls = extract_urls(commit.message)
        if not urls:
            stats.skipped["no_url"] += 1
            continue

        diff = commit_diff(commit)
        if diff.is_empty():
            stats.skipped["empty_diff"] += 1
            continue
        if all(is_cosmetic(line) for line in diff.added + diff.removed):
            stats.skipped["cosmetic_only"] += 1
            continue

        if commit_class is CommitClass.FIX:
            label, example_diff = Label.BROKEN, invert(diff)
        else:
            label, example_diff = Label.WORKING, diff

        for index, url in enumerate(urls):
            examples.append(LabeledExample(
                example_id=f"{commit.id}-{index}",
                page_url=url,
                diff=example_diff,
                label=label,
                source_commit=commit.id,
            ))

    stats.examples = len(examples)
    logger.info("%d commits → %d exemples (ignorés: %s)",
                stats.commits, stats.examples, dict(stats.skipped))
    return examples


def write_examples_jsonl(examples, stream):
    for example in examples:
        stream.write(json.dumps(example.to_dict(), ensure_ascii=False) + "\n")


def read_examples_jsonl(stream):
    examples = []
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            examples.append(LabeledExample(
                example_id=row["example_id"],
                page_url=row["page_url"],
                diff=FilterListDiff.from_dict(row["diff"]),
                label=Label(row["label"]),
                source_commit=row.get("source_commit") or "",
            ))
        except (json.JSONDecodeError, KeyError, ValueError) as e:
            raise MalformedRecord(f"invalid example ({e})", line_no) from e
    return examples
