"""End-to-end checks over the whole toolkit, one test per guarantee.

Each test announces its verdict on a single PASS/FAIL line so a suite run
doubles as a checklist. Everything here runs offline: endpoints are local
mock servers and no frontend is involved.
"""

import itertools
import json
import random
import time
from contextlib import contextmanager

import pytest

from mockserver import MockEndpoint

from editseq.client import Endpoint, EndpointConfig, Prediction
from editseq.diffcore import EditChunk, apply_chunks, diff_chunks
from editseq.evaluator import (
    aggregate,
    evaluate_batch,
    evaluate_sample,
    judge_batch,
)
from editseq.filtering import (
    ADDITIVE_ONLY,
    BOUNDED_LENGTH,
    LIMITED_SCOPE,
    MULTIPLE_CHUNKS,
    FilterConfig,
    apply_filters,
)
from editseq.formatter import (
    EditSequenceSample,
    MalformedTaskText,
    ReconstructionMismatch,
    SampleMeta,
    SENT_NEXT,
    make_sequence_sample,
    parse_task_text,
    render_task_text,
)
from editseq.labeler import count_labels, label_with_endpoint
from editseq.report import fmt_pct, format_report_table
from editseq.review import QuotaFull, ReviewSession


@pytest.fixture
def criterion(request):
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(line):
        if reporter is not None:
            reporter.write_line(line)
        else:  # pragma: no cover - plain python fallback
            print(line)

    @contextmanager
    def check(name):
        try:
            yield
        except BaseException:
            emit(f"ACCEPTANCE {name}: FAIL")
            raise
        emit(f"ACCEPTANCE {name}: PASS")

    return check


# ---------------------------------------------------------------------------
# 1. diff round trip
# ---------------------------------------------------------------------------

LINE_POOL = (
    ["" for _ in range(4)]
    + ["}", "{", "    return x", "import os", "# note"]
    + [f"line_{i}" for i in range(40)]
    + ["\tindent", "x = 1  ", "def f():"]
)


def random_text(rng, max_lines=200):
    lines = [rng.choice(LINE_POOL) for _ in range(rng.randint(0, max_lines))]
    return lines


def mutate(rng, lines):
    out = list(lines)
    for _ in range(rng.randint(1, 8)):
        op = rng.choice(("insert", "delete", "replace"))
        run = rng.randint(1, 6)
        at = rng.randint(0, len(out)) if out else 0
        if op == "insert" or not out:
            out[at:at] = [rng.choice(LINE_POOL) for _ in range(run)]
        elif op == "delete":
            del out[at : at + run]
        else:
            out[at : at + run] = [rng.choice(LINE_POOL) for _ in range(run)]
    return out


def to_text(rng, lines):
    if not lines:
        return ""
    return "\n".join(lines) + ("\n" if rng.random() < 0.8 else "")


class TestDiffRoundTrip:
    def test_500_random_pairs(self, criterion):
        with criterion("diff round-trip (500 pairs, byte-exact, <5s)"):
            rng = random.Random(0x5EED)
            start = time.perf_counter()
            for _ in range(500):
                old_lines = random_text(rng)
                old = to_text(rng, old_lines)
                new = to_text(rng, mutate(rng, old_lines))
                chunks = diff_chunks(old, new)
                assert apply_chunks(old, chunks) == new
            elapsed = time.perf_counter() - start
            assert elapsed < 5.0, f"took {elapsed:.2f}s"


# ---------------------------------------------------------------------------
# 2. minimality against an LCS oracle
# ---------------------------------------------------------------------------


def lcs_length(a, b):
    m, n = len(a), len(b)
    prev = [0] * (n + 1)
    for i in range(1, m + 1):
        cur = [0] * (n + 1)
        ai = a[i - 1]
        for j in range(1, n + 1):
            cur[j] = prev[j - 1] + 1 if ai == b[j - 1] else max(prev[j], cur[j - 1])
        prev = cur
    return prev[n]


def script_length(old, new):
    return sum(len(c.old_lines) + len(c.new_lines) for c in diff_chunks(old, new))


def join(lines):
    return "".join(line + "\n" for line in lines)


class TestLcsOracle:
    def test_script_length_is_minimal(self, criterion):
        alphabet = ("a", "b", "c")

        def texts(length):
            return itertools.product(alphabet, repeat=length)

        with criterion("LCS oracle (exhaustive small pairs + sampled to 12 lines)"):
            checked = 0
            # every pair with combined length <= 6
            for m in range(0, 7):
                for n in range(0, 7 - m):
                    for a in texts(m):
                        for b in texts(n):
                            expect = m + n - 2 * lcs_length(a, b)
                            assert script_length(join(a), join(b)) == expect
                            checked += 1
            # sampled longer pairs, up to 12 lines a side
            rng = random.Random(12)
            for _ in range(3000):
                a = [rng.choice(alphabet) for _ in range(rng.randint(0, 12))]
                b = [rng.choice(alphabet) for _ in range(rng.randint(0, 12))]
                expect = len(a) + len(b) - 2 * lcs_length(a, b)
                assert script_length(join(a), join(b)) == expect
                checked += 1
            assert checked > 10000


# ---------------------------------------------------------------------------
# 3. filter rule boundaries
# ---------------------------------------------------------------------------


def repl(old_at, n_old, new_at=None, n_new=None):
    n_new = n_old if n_new is None else n_new
    new_at = old_at if new_at is None else new_at
    return EditChunk(old_at, ("x",) * n_old, new_at, ("y",) * n_new)


def ins(old_after, new_at, n):
    return EditChunk(old_after, (), new_at, ("y",) * n)


def dele(old_at, new_after, n):
    return EditChunk(old_at, ("x",) * n, new_after, ())


def two_small():
    return [repl(1, 1), repl(5, 1)]


# name, chunks, additive_mode, expected failed rules
BOUNDARY_CASES = [
    ("two chunks pass", two_small(), "lenient", set()),
    ("one chunk fails", [repl(1, 1)], "lenient", {MULTIPLE_CHUNKS}),
    ("three chunks pass", [repl(1, 1), repl(5, 1), repl(9, 1)], "lenient", set()),
    ("empty change list fails", [], "lenient", {MULTIPLE_CHUNKS}),
    ("5-line removal passes", [repl(1, 5), repl(9, 1)], "lenient", set()),
    ("6-line removal fails", [repl(1, 6), repl(10, 1)], "lenient", {BOUNDED_LENGTH}),
    ("5-line insertion passes", [ins(1, 2, 5), repl(10, 1, 14, 1)], "lenient", set()),
    ("6-line insertion fails", [ins(1, 2, 6), repl(10, 1, 15, 1)], "lenient", {BOUNDED_LENGTH}),
    ("5-to-3 replacement passes", [repl(1, 5, 1, 3), repl(9, 1, 7, 1)], "lenient", set()),
    ("3-to-6 replacement fails", [repl(1, 3, 1, 6), repl(9, 1, 12, 1)], "lenient", {BOUNDED_LENGTH}),
    ("span 80 passes", [repl(1, 1), repl(80, 1)], "lenient", set()),
    ("span 81 fails", [repl(1, 1), repl(81, 1)], "lenient", {LIMITED_SCOPE}),
    ("span 2 passes", [repl(3, 1), repl(4, 1)], "lenient", set()),
    ("span 80 multi-line tail passes", [repl(1, 1), repl(76, 5)], "lenient", set()),
    ("span 81 via tail length fails", [repl(1, 1), repl(77, 5)], "lenient", {LIMITED_SCOPE}),
    ("deletion among edits fails lenient", [repl(1, 1), dele(5, 4, 2)], "lenient", {ADDITIVE_ONLY}),
    ("pure deletions fail lenient", [dele(1, 0, 1), dele(5, 3, 2)], "lenient", {ADDITIVE_ONLY}),
    ("insertions pass lenient", [ins(2, 3, 2), ins(6, 9, 1)], "lenient", set()),
    ("insertions pass strict", [ins(2, 3, 2), ins(6, 9, 1)], "strict", set()),
    ("replacement fails strict only", [repl(1, 1), ins(6, 7, 1)], "strict", {ADDITIVE_ONLY}),
    ("deletion fails strict", [ins(2, 3, 2), dele(6, 8, 1)], "strict", {ADDITIVE_ONLY}),
    ("5-line insertions at span 80 pass strict", [ins(1, 1, 5), ins(70, 76, 5)], "strict", set()),
    ("single oversized chunk fails twice", [repl(1, 6)], "lenient", {MULTIPLE_CHUNKS, BOUNDED_LENGTH}),
    (
        "distant oversized deletion fails three ways",
        [repl(1, 1), dele(6, 5, 6), repl(90, 1, 84, 1)],
        "lenient",
        {BOUNDED_LENGTH, LIMITED_SCOPE, ADDITIVE_ONLY},
    ),
]


class TestFilterBoundaries:
    def test_24_case_corpus(self, criterion):
        assert len(BOUNDARY_CASES) == 24
        with criterion("filter boundaries (24/24 expected verdicts)"):
            failures = []
            for name, chunks, mode, expected in BOUNDARY_CASES:
                verdict = apply_filters(chunks, FilterConfig(additive_mode=mode))
                if set(verdict.failed_rules) != expected or verdict.passed != (not expected):
                    failures.append((name, verdict.failed_rules, expected))
            assert not failures, failures


# ---------------------------------------------------------------------------
# 4. the single-pending-chunk sample invariant
# ---------------------------------------------------------------------------


class TestSampleInvariant:
    def test_fixture_pipeline_samples(self, criterion, pipeline_samples):
        with criterion("sample invariant (one pending chunk, apply == new)"):
            assert pipeline_samples  # the corpus must actually produce samples
            for sample in pipeline_samples:
                pending = diff_chunks(sample.current_contents, sample.new_contents)
                assert len(pending) == 1, sample.sample_id
                applied = apply_chunks(sample.current_contents, pending)
                assert applied == sample.new_contents, sample.sample_id


# ---------------------------------------------------------------------------
# 5 + 6. metric strictness
# ---------------------------------------------------------------------------


def perturb(rng, sample):
    """One random prediction: a mutation of gold/new/current text."""
    base = rng.choice((sample.new_contents, sample.current_contents))
    lines = base.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    op = rng.randrange(5)
    if op == 0:
        return base  # unchanged
    if op == 1:
        return base + "\n" * rng.randint(1, 3)
    if op == 2 and lines:
        at = rng.randrange(len(lines))
        lines[at] = lines[at] + "_mut"
    elif op == 3 and lines:
        at = rng.randrange(len(lines))
        del lines[at]
    else:
        at = rng.randint(0, len(lines))
        lines[at:at] = [f"mut_{rng.randrange(999)}"]
    return "\n".join(lines) + "\n"


class TestMetricStrictness:
    def test_fuzz_and_reference_predictors(self, criterion, pipeline_samples):
        with criterion("metric strictness (1000-prediction fuzz, 100.00 / 0.00 anchors)"):
            rng = random.Random(5)
            for i in range(1000):
                sample = pipeline_samples[i % len(pipeline_samples)]
                rec = evaluate_sample(sample, perturb(rng, sample))
                assert rec.exact <= rec.partial <= rec.position, (i, rec)

            perfect = {
                s.sample_id: Prediction(sample_id=s.sample_id, extracted=s.new_contents)
                for s in pipeline_samples
            }
            allrow = aggregate(evaluate_batch(pipeline_samples, perfect))[-1]
            assert (fmt_pct(allrow.exact_pct), fmt_pct(allrow.partial_pct),
                    fmt_pct(allrow.position_pct)) == ("100.00", "100.00", "100.00")

            identity = {
                s.sample_id: Prediction(sample_id=s.sample_id, extracted=s.current_contents)
                for s in pipeline_samples
            }
            allrow = aggregate(evaluate_batch(pipeline_samples, identity))[-1]
            assert (fmt_pct(allrow.exact_pct), fmt_pct(allrow.partial_pct),
                    fmt_pct(allrow.position_pct)) == ("0.00", "0.00", "0.00")

    def test_right_place_wrong_content(self, criterion):
        with criterion("decoupling case (gold location, wrong content: position only)"):
            base = [f"line{i:02d}" for i in range(24)]
            old = "\n".join(base) + "\n"
            staged = list(base)
            staged[2] = "HISTORY"
            final = list(staged)
            final[12] = "TARGET"
            new = "\n".join(final) + "\n"
            sample = make_sequence_sample(
                old, new, diff_chunks(old, new), SampleMeta("r", "c", "f.py", "Python")
            )
            wrong = list(staged)
            wrong[12] = "SOMETHING ELSE"
            rec = evaluate_sample(sample, "\n".join(wrong) + "\n")
            assert rec.position is True
            assert rec.partial is False
            assert rec.exact is False


# ---------------------------------------------------------------------------
# 7. serialized-task bijection
# ---------------------------------------------------------------------------


def random_sample(rng, index):
    n = rng.randint(8, 30)
    base = [f"ln{index}_{i}" for i in range(n)]
    old = "\n".join(base) + "\n"
    lines = list(base)
    edits = rng.randint(2, 4)
    spots = sorted(rng.sample(range(n), edits * 2))
    for e in range(edits):
        at = spots[e * 2]
        kind = rng.choice(("replace", "insert"))
        if kind == "replace":
            lines[lines.index(base[at])] = f"edit{index}_{e}"
        else:
            lines.insert(lines.index(base[at]), f"add{index}_{e}")
    new = "\n".join(lines) + "\n"
    meta = SampleMeta(f"org/r{index}", f"c{index:04d}", f"src/m{index}.py", "Python")
    return make_sequence_sample(old, new, diff_chunks(old, new), meta)


class TestTaskTextBijection:
    def test_200_random_samples(self, criterion):
        with criterion("task text bijection (200 samples, sentinel rules enforced)"):
            rng = random.Random(7)
            built = 0
            index = 0
            while built < 200:
                index += 1
                try:
                    sample = random_sample(rng, index)
                except ReconstructionMismatch:
                    continue
                task = render_task_text(sample)
                parsed = parse_task_text(task.text, metadata=sample.metadata)
                assert parsed == sample
                built += 1

            # uniqueness and order are hard requirements of the format
            sample = random_sample(rng, 9999)
            text = render_task_text(sample).text
            with pytest.raises(MalformedTaskText):
                parse_task_text(text + "\n" + SENT_NEXT + "\n")
            scrambled = text.replace("<|original_code|>", "<|tmp|>", 1)
            scrambled = scrambled.replace("<|current_version|>", "<|original_code|>", 1)
            scrambled = scrambled.replace("<|tmp|>", "<|current_version|>", 1)
            with pytest.raises(MalformedTaskText):
                parse_task_text(scrambled)


# ---------------------------------------------------------------------------
# 8. scripted endpoints for labeling and judging
# ---------------------------------------------------------------------------


def scripted_endpoint(server, **overrides):
    config = dict(
        base_url=server.base_url,
        model="scripted",
        max_retries=2,
        backoff_base=0.001,
        backoff_cap=0.002,
        concurrency=2,
    )
    config.update(overrides)
    return Endpoint(EndpointConfig(**config))


class TestScriptedEndpoints:
    def test_labeling_and_judging(self, criterion, pipeline_samples):
        with criterion("mock-endpoint labeling and judging (ratios, retries, conservation)"):
            samples = pipeline_samples
            targets = [s.target_diff().rstrip("\n") for s in samples]

            # first reply for sample 0 is garbage (retry path); verdicts then
            # follow a fixed 3-positive / 2-negative script
            state = {"first": True}

            def respond_label(payload, index):
                prompt = payload["messages"][0]["content"]
                which = next(i for i, t in enumerate(targets) if t in prompt)
                if which == 0 and state.pop("first", None):
                    return "hmm, thinking about it"
                return "POSITIVE" if which < 3 else "NEGATIVE"

            with MockEndpoint(respond_label) as server:
                records = label_with_endpoint(scripted_endpoint(server), samples)
            counts = count_labels(records)
            assert counts.total == len(samples) == 5
            assert counts.positive == 3
            assert counts.negative == 2
            assert counts.unparseable == 0
            by_id = {r.sample_id: r for r in records}
            assert by_id[samples[0].sample_id].attempts == 2  # one re-request
            assert all(by_id[s.sample_id].attempts == 1 for s in samples[1:])

            # a stubborn endpoint exhausts retries into unparseable, conserved
            with MockEndpoint(lambda p, n: "shrug") as server:
                records = label_with_endpoint(
                    scripted_endpoint(server, max_retries=1), samples
                )
            counts = count_labels(records)
            assert counts.unparseable == counts.total == 5
            assert counts.positive == counts.negative == 0

            # judging: perfect predictions, scripted 4-yes / 1-no verdicts
            predictions = {
                s.sample_id: Prediction(sample_id=s.sample_id, extracted=s.new_contents)
                for s in samples
            }
            records = evaluate_batch(samples, predictions)
            reject = samples[2].current_contents.rstrip("\n")

            def respond_judge(payload, index):
                prompt = payload["messages"][0]["content"]
                return "INCORRECT" if reject in prompt else "CORRECT"

            with MockEndpoint(respond_judge) as server:
                judge_batch(scripted_endpoint(server), samples, predictions, records)
            allrow = aggregate(records)[-1]
            assert allrow.judge_yes == 4
            assert allrow.judge_no == 1
            assert fmt_pct(allrow.judge_pct) == "80.00"
            assert allrow.judge_unjudged == 0


# ---------------------------------------------------------------------------
# 9 + 10. reporting shape and the curation flow
# ---------------------------------------------------------------------------

SEVEN = ("C", "C++", "Go", "Java", "JavaScript", "Python", "TypeScript")


def bench_sample(language, index):
    base = [f"{language}_{index}_{i}" for i in range(10)]
    old = "\n".join(base) + "\n"
    staged = list(base)
    staged[1] = "H"
    final = list(staged)
    final[6] = "T"
    new = "\n".join(final) + "\n"
    meta = SampleMeta(
        repo_id=f"org/{language.lower().replace('+', 'p')}{index % 4}",
        commit_id=f"c{index:03d}",
        file_path=f"src/f{index}.code",
        language=language,
    )
    return make_sequence_sample(old, new, diff_chunks(old, new), meta)


class TestReportShape:
    def test_seven_language_table_and_210_line_export(self, criterion, tmp_path):
        with criterion("report formatting (7+All table, 2 decimals, 210-line export)"):
            samples = {
                lang: [bench_sample(lang, i) for i in range(30)] for lang in SEVEN
            }
            records = []
            for lang, batch in samples.items():
                preds = {}
                for i, sample in enumerate(batch):
                    text = sample.new_contents if i < 10 else sample.current_contents
                    preds[sample.sample_id] = Prediction(
                        sample_id=sample.sample_id, extracted=text
                    )
                records.extend(evaluate_batch(batch, preds))
            reports = aggregate(records)
            table = format_report_table(reports)
            lines = table.splitlines()
            assert len(lines) == 2 + len(SEVEN) + 1
            assert [l.split()[0] for l in lines[2:]] == list(SEVEN) + ["All"]
            for line in lines[2:]:
                cells = line.split()
                assert cells[2] == "33.33"  # 10 of 30 exact, every bucket
                assert all("." in c and len(c.split(".")[1]) == 2 for c in cells[2:5])
            assert lines[-1].split()[1] == "210"

            # quota arithmetic: 7 languages x 30 accepted -> 210 export lines
            candidates = tmp_path / "candidates.jsonl"
            with open(candidates, "w") as fh:
                for batch in samples.values():
                    for sample in batch:
                        fh.write(json.dumps(sample.to_dict()) + "\n")
            session = ReviewSession.open(str(candidates), str(tmp_path / "log.jsonl"), quota=30)
            for item in session.items():
                session.decide(item.sample_id, "accept")
            export = tmp_path / "benchmark.jsonl"
            with open(export, "w") as fh:
                for sample in session.export_accepted():
                    fh.write(json.dumps(sample.to_dict()) + "\n")
            assert len(export.read_text().splitlines()) == 210


class TestCurationFlow:
    def test_quota_stop_export_and_replay(self, criterion, tmp_path):
        with criterion("curation flow (30-accept quota, QuotaFull, replay identity)"):
            py = [bench_sample("Python", i) for i in range(31)]
            go = [bench_sample("Go", 100 + i) for i in range(19)]
            candidates = tmp_path / "candidates.jsonl"
            with open(candidates, "w") as fh:
                for sample in py + go:
                    fh.write(json.dumps(sample.to_dict()) + "\n")
            log = tmp_path / "decisions.jsonl"

            session = ReviewSession.open(str(candidates), str(log), quota=30)
            assert len(session.items()) == 50
            for sample in py[:30]:
                session.decide(sample.sample_id, "accept")
            with pytest.raises(QuotaFull) as exc:
                session.decide(py[30].sample_id, "accept")
            assert exc.value.language == "Python"
            session.decide(py[30].sample_id, "reject")
            for sample in go[:3]:
                session.decide(sample.sample_id, "skip")
            session.close()

            exported = session.export_accepted()
            assert len(exported) == 30
            assert {s.sample_id for s in exported} == {s.sample_id for s in py[:30]}

            # a restart rebuilds exactly what the UI was showing
            reopened = ReviewSession.open(str(candidates), str(log), quota=30)
            assert [(i.sample_id, i.state) for i in reopened.items()] == [
                (i.sample_id, i.state) for i in session.items()
            ]
            assert reopened.progress() == session.progress()
            assert [s.sample_id for s in reopened.export_accepted()] == [
                s.sample_id for s in exported
            ]
