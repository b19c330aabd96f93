"""Prompt templates and built-in demonstration samples.

Templates are versioned and hashed so downstream runs can record exactly
which prompt produced a label or verdict. Demonstrations are constructed
through the normal sample pipeline, which keeps them honest: if the
construction invariants change, these break loudly at import time.
"""

from __future__ import annotations

import hashlib

from .diffcore import diff_chunks
from .formatter import EditSequenceSample, SampleMeta, make_sequence_sample

LABEL_PROMPT_VERSION = "label-v1"
JUDGE_PROMPT_VERSION = "judge-v1"

POSITIVE = "POSITIVE"
NEGATIVE = "NEGATIVE"

LABEL_TEMPLATE = """\
You review sequences of code edits. Each case shows the edits a developer
has already made to one file (as a unified diff) and one more candidate
edit to the same file. Decide whether the candidate edit is a natural
continuation of the edits made so far: part of the same task, predictable
from the pattern of the previous edits. Answer POSITIVE if it is, NEGATIVE
if the candidate edit is unrelated or not predictable from the history.
Answer with the single word POSITIVE or NEGATIVE on the last line.

{demos}
Edits made so far:
{history_diff}

Candidate next edit:
{target_diff}

Answer:"""

LABEL_DEMO_TEMPLATE = """\
Example:

Edits made so far:
{history_diff}

Candidate next edit:
{target_diff}

Answer: {label}

"""

JUDGE_TEMPLATE = """\
You grade one predicted code edit. A developer has been editing a file;
the edits made so far and the file's current state are shown below, then
the edit the developer actually made next, then a model's predicted next
version of the file. Decide whether the prediction makes the same change
as the actual next edit. Ignore differences in whitespace, comments, and
naming that do not change behavior; a prediction that edits a different
part of the file or makes a different change is wrong. Answer with the
single word CORRECT if the prediction matches the actual next edit,
INCORRECT otherwise, on the last line.

Edits made so far:
{history_diff}

Current file contents:
{current}

Actual next edit:
{gold_edit}

Predicted next version of the file:
{predicted}

Answer:"""


def prompt_hash(template: str) -> str:
    return hashlib.sha256(template.encode("utf-8")).hexdigest()


LABEL_TEMPLATE_SHA256 = prompt_hash(LABEL_TEMPLATE)
JUDGE_TEMPLATE_SHA256 = prompt_hash(JUDGE_TEMPLATE)


_POSITIVE_OLD = """\
from rally.benchmark.scenarios import base

from tests.unit import test


class DummyScenario(base.Scenario):

    @base.scenario()
    def sleep_between(self, min_sleep, max_sleep):
        self._sleep_between(min_sleep, max_sleep)
"""

_POSITIVE_NEW = """\
from rally.plugins.openstack import scenario

from tests.unit import test


class DummyScenario(scenario.OpenStackScenario):

    @scenario.configure()
    def sleep_between(self, min_sleep, max_sleep):
        self._sleep_between(min_sleep, max_sleep)
"""

_NEGATIVE_OLD = """\
from setuptools import setup

setup(
    name="demo-pkg",
    version="1.0.1",
    author="Jane Doe",
    author_email="jane@old-mail.example",
    packages=["demo_pkg"],
)
"""

_NEGATIVE_NEW = """\
from setuptools import setup

setup(
    name="demo-pkg",
    version="1.0.2",
    author="Jane Doe",
    author_email="jane@new-mail.example",
    packages=["demo_pkg"],
)
"""


def _demo(old: str, new: str, meta: SampleMeta) -> EditSequenceSample:
    return make_sequence_sample(old, new, diff_chunks(old, new), meta)


def demo_positive() -> EditSequenceSample:
    """Migration demo: two renames done, the decorator rename clearly next."""
    return _demo(
        _POSITIVE_OLD,
        _POSITIVE_NEW,
        SampleMeta(
            repo_id="demo/scenario-migration",
            commit_id="demo-positive",
            file_path="tests/unit/dummy_scenario.py",
            language="Python",
            message="Port scenarios to the plugin base class",
        ),
    )


def demo_negative() -> EditSequenceSample:
    """Unrelated-pairing demo: a version bump does not predict a contact edit."""
    return _demo(
        _NEGATIVE_OLD,
        _NEGATIVE_NEW,
        SampleMeta(
            repo_id="demo/package-metadata",
            commit_id="demo-negative",
            file_path="setup.py",
            language="Python",
            message="Release 1.0.2 and update contact address",
        ),
    )


def default_oneshot_demo() -> EditSequenceSample:
    """Demonstration used by inference prompts unless the caller supplies one."""
    return demo_positive()


def render_label_demo(sample: EditSequenceSample, label: str) -> str:
    if label not in (POSITIVE, NEGATIVE):
        raise ValueError(f"label must be {POSITIVE} or {NEGATIVE}, got {label!r}")
    return LABEL_DEMO_TEMPLATE.format(
        history_diff=sample.history_diff.rstrip("\n"),
        target_diff=sample.target_diff().rstrip("\n"),
        label=label,
    )


def build_label_prompt(
    sample: EditSequenceSample,
    demos: list[tuple[EditSequenceSample, str]] | None = None,
    template: str | None = None,
) -> str:
    """Labeling prompt with at least one demo of each class.

    Stacking only positives (or only negatives) teaches the model the wrong
    prior, so an unbalanced demo set is rejected outright. A replacement
    template must keep the {demos}, {history_diff}, and {target_diff} slots.
    """
    if demos is None:
        demos = [(demo_positive(), POSITIVE), (demo_negative(), NEGATIVE)]
    labels = {label for _, label in demos}
    if not {POSITIVE, NEGATIVE} <= labels:
        raise ValueError("demos must include at least one POSITIVE and one NEGATIVE")
    rendered = "".join(render_label_demo(s, label) for s, label in demos)
    return (template or LABEL_TEMPLATE).format(
        demos=rendered,
        history_diff=sample.history_diff.rstrip("\n"),
        target_diff=sample.target_diff().rstrip("\n"),
    )


def build_judge_prompt(
    sample: EditSequenceSample,
    predicted: str,
    template: str | None = None,
) -> str:
    """Grading prompt for one prediction against the sample's actual edit."""
    return (template or JUDGE_TEMPLATE).format(
        history_diff=sample.history_diff.rstrip("\n"),
        current=sample.current_contents.rstrip("\n"),
        gold_edit=sample.target_diff().rstrip("\n"),
        predicted=predicted.rstrip("\n"),
    )
