"""Read commit corpora and crawl git repositories for file edits.

Two sources produce the same record shape: pre-extracted JSONL corpora
(one modified file per row, with full before/after contents) and local
git checkouts walked commit by commit. Downstream stages only ever see
CommitSample, so they do not care where a record came from.
"""

from __future__ import annotations

import json
import os
import subprocess
from dataclasses import dataclass

from .formatter import SampleMeta

PYTHON = "Python"
JAVA = "Java"
GO = "Go"
C = "C"
CPP = "C++"
JAVASCRIPT = "JavaScript"
TYPESCRIPT = "TypeScript"

LANGUAGES = (C, CPP, GO, JAVA, JAVASCRIPT, PYTHON, TYPESCRIPT)

EXTENSION_MAP = {
    ".py": PYTHON,
    ".java": JAVA,
    ".go": GO,
    ".c": C,
    ".h": C,
    ".cpp": CPP,
    ".cc": CPP,
    ".cxx": CPP,
    ".hpp": CPP,
    ".hh": CPP,
    ".js": JAVASCRIPT,
    ".jsx": JAVASCRIPT,
    ".mjs": JAVASCRIPT,
    ".ts": TYPESCRIPT,
    ".tsx": TYPESCRIPT,
}

_LANG_ALIASES = {
    "python": PYTHON,
    "java": JAVA,
    "go": GO,
    "golang": GO,
    "c": C,
    "c++": CPP,
    "cpp": CPP,
    "javascript": JAVASCRIPT,
    "js": JAVASCRIPT,
    "typescript": TYPESCRIPT,
    "ts": TYPESCRIPT,
}

MAX_FILE_BYTES = 1 << 20  # files beyond this are vendored blobs, not edits


def language_for_path(path: str) -> str | None:
    _, ext = os.path.splitext(path)
    return EXTENSION_MAP.get(ext.lower())


def normalize_language(name: str) -> str | None:
    return _LANG_ALIASES.get(name.strip().lower())


def normalize_repo(name: str) -> str:
    """Canonical 'owner/name' form for exclusion matching."""
    name = name.strip().lower()
    for prefix in ("https://", "http://", "git@", "ssh://"):
        if name.startswith(prefix):
            name = name[len(prefix) :]
    if "github.com" in name:
        name = name.split("github.com", 1)[1].lstrip(":/")
    if name.endswith(".git"):
        name = name[: -len(".git")]
    return name.strip("/")


@dataclass(frozen=True)
class IngestConfig:
    languages: frozenset[str] = frozenset(LANGUAGES)
    exclude_repos: frozenset[str] = frozenset()
    max_file_bytes: int = MAX_FILE_BYTES

    def __post_init__(self):
        unknown = self.languages - set(LANGUAGES)
        if unknown:
            raise ValueError(f"unknown languages: {sorted(unknown)}")
        if self.max_file_bytes < 1:
            raise ValueError("max_file_bytes must be >= 1")

    def repo_excluded(self, repo_id: str) -> bool:
        return normalize_repo(repo_id) in self.exclude_repos

    @classmethod
    def with_exclusions(cls, repos, **kw) -> "IngestConfig":
        return cls(exclude_repos=frozenset(normalize_repo(r) for r in repos), **kw)


@dataclass(frozen=True)
class CommitSample:
    repo_id: str
    commit_id: str
    file_path: str
    language: str
    message: str
    old_contents: str
    new_contents: str

    def meta(self) -> SampleMeta:
        return SampleMeta(
            repo_id=self.repo_id,
            commit_id=self.commit_id,
            file_path=self.file_path,
            language=self.language,
            message=self.message,
        )

    def to_dict(self) -> dict:
        return {
            "repo_id": self.repo_id,
            "commit_id": self.commit_id,
            "file_path": self.file_path,
            "language": self.language,
            "message": self.message,
            "old_contents": self.old_contents,
            "new_contents": self.new_contents,
        }


@dataclass
class IngestStats:
    total: int = 0
    kept: int = 0
    skipped_malformed: int = 0
    skipped_missing_fields: int = 0
    skipped_language: int = 0
    skipped_excluded: int = 0
    skipped_too_large: int = 0
    skipped_binary: int = 0
    skipped_identical: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _contents_ok(old: str, new: str, config: IngestConfig, stats: IngestStats) -> bool:
    if "\x00" in old or "\x00" in new:
        stats.skipped_binary += 1
        return False
    if (
        len(old.encode("utf-8", errors="replace")) > config.max_file_bytes
        or len(new.encode("utf-8", errors="replace")) > config.max_file_bytes
    ):
        stats.skipped_too_large += 1
        return False
    if old == new:
        stats.skipped_identical += 1
        return False
    return True


def read_commit_jsonl(path: str, config: IngestConfig | None = None):
    """Read a commit corpus. Returns (samples, stats).

    Expected row fields: commit, old_file, new_file, old_contents,
    new_contents, subject, message, lang, repos. `repos` may list several
    names comma separated; the first one is taken as the owner.
    """
    config = config or IngestConfig()
    stats = IngestStats()
    samples: list[CommitSample] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            stats.total += 1
            try:
                row = json.loads(line)
            except json.JSONDecodeError:
                stats.skipped_malformed += 1
                continue
            if not isinstance(row, dict):
                stats.skipped_malformed += 1
                continue
            commit = row.get("commit")
            old = row.get("old_contents")
            new = row.get("new_contents")
            file_path = row.get("new_file") or row.get("old_file")
            repos = row.get("repos", "")
            if not commit or old is None or new is None or not file_path:
                stats.skipped_missing_fields += 1
                continue
            language = None
            if row.get("lang"):
                language = normalize_language(str(row["lang"]))
            if language is None:
                language = language_for_path(file_path)
            if language is None or language not in config.languages:
                stats.skipped_language += 1
                continue
            repo_id = str(repos).split(",")[0].strip()
            if not repo_id:
                stats.skipped_missing_fields += 1
                continue
            if config.repo_excluded(repo_id):
                stats.skipped_excluded += 1
                continue
            if not _contents_ok(old, new, config, stats):
                continue
            message = (row.get("message") or row.get("subject") or "").strip()
            samples.append(
                CommitSample(
                    repo_id=repo_id,
                    commit_id=str(commit),
                    file_path=str(file_path),
                    language=language,
                    message=message,
                    old_contents=old,
                    new_contents=new,
                )
            )
            stats.kept += 1
    return samples, stats


def _git(repo_path: str, *args: str) -> bytes:
    out = subprocess.run(
        ["git", "-C", repo_path, *args],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        check=True,
    )
    return out.stdout


def _git_text(repo_path: str, *args: str) -> str:
    return _git(repo_path, *args).decode("utf-8", errors="replace")


def crawl_git_repo(repo_path: str, repo_id: str | None = None, config: IngestConfig | None = None):
    """Walk a local repository's history, oldest first. Returns (samples, stats).

    Merge commits are skipped entirely (their file states restate the
    parents' work) and only modified files count: adds and deletes have no
    before/after pair to learn from. Root commits therefore contribute
    nothing either.
    """
    config = config or IngestConfig()
    if repo_id is None:
        repo_id = os.path.basename(os.path.abspath(repo_path))
    stats = IngestStats()
    samples: list[CommitSample] = []
    shas = _git_text(
        repo_path, "rev-list", "--no-merges", "--topo-order", "--reverse", "HEAD"
    ).split()
    if config.repo_excluded(repo_id):
        stats.skipped_excluded = len(shas)
        return samples, stats
    for sha in shas:
        message = _git_text(repo_path, "log", "-1", "--format=%B", sha).strip()
        tree = _git_text(repo_path, "diff-tree", "-r", "--name-status", "--no-commit-id", sha)
        for entry in tree.splitlines():
            if not entry.strip():
                continue
            parts = entry.split("\t")
            if len(parts) < 2 or parts[0] != "M":
                continue
            file_path = parts[1]
            stats.total += 1
            language = language_for_path(file_path)
            if language is None or language not in config.languages:
                stats.skipped_language += 1
                continue
            try:
                old_raw = _git(repo_path, "show", f"{sha}^:{file_path}")
                new_raw = _git(repo_path, "show", f"{sha}:{file_path}")
            except subprocess.CalledProcessError:
                stats.skipped_missing_fields += 1
                continue
            if len(old_raw) > config.max_file_bytes or len(new_raw) > config.max_file_bytes:
                stats.skipped_too_large += 1
                continue
            if b"\x00" in old_raw or b"\x00" in new_raw:
                stats.skipped_binary += 1
                continue
            try:
                old = old_raw.decode("utf-8")
                new = new_raw.decode("utf-8")
            except UnicodeDecodeError:
                stats.skipped_binary += 1
                continue
            if old == new:
                stats.skipped_identical += 1
                continue
            samples.append(
                CommitSample(
                    repo_id=repo_id,
                    commit_id=sha,
                    file_path=file_path,
                    language=language,
                    message=message,
                    old_contents=old,
                    new_contents=new,
                )
            )
            stats.kept += 1
    return samples, stats
