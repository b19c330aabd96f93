import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))  # for mockserver import

from editseq.diffcore import diff_chunks
from editseq.filtering import apply_filters
from editseq.formatter import make_sequence_sample
from editseq.ingest import read_commit_jsonl

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
CORPUS = os.path.join(FIXTURES, "commitpack_small.jsonl")


@pytest.fixture(scope="session")
def corpus_path() -> str:
    return CORPUS


@pytest.fixture(scope="session")
def commit_samples():
    samples, stats = read_commit_jsonl(CORPUS)
    assert stats.kept == 12
    return samples


@pytest.fixture(scope="session")
def pipeline_samples(commit_samples):
    """The fixture corpus taken through filter + sample construction."""
    out = []
    for commit in commit_samples:
        chunks = diff_chunks(commit.old_contents, commit.new_contents)
        if not apply_filters(chunks).passed:
            continue
        out.append(
            make_sequence_sample(
                commit.old_contents, commit.new_contents, chunks, commit.meta()
            )
        )
    assert len(out) == 5
    return out
