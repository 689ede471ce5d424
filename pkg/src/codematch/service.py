"""HTTP service running the two-step annotation protocol.

Annotators first judge whether the query has code-search intent; only on a
"yes" do they judge whether the code answers the query.  Votes land in an
append-only JSONL log; all derived state (scheduling, agreement, export)
is a pure function of that log, so replaying it reproduces the export
byte for byte.

Endpoints (JSON): POST /annotators, GET /tasks/next?annotator=ID,
POST /judgments, GET /progress, GET /agreement, GET /export.
Status codes: 200 on success, 400 protocol violation, 401 unknown
annotator, 409 duplicate vote.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException, Query as QueryParam, Response
from pydantic import BaseModel

from .agreement import (
    AgreementPolicy,
    DegenerateAgreementError,
    agreement_share,
    filter_by_agreement,
    krippendorff_alpha,
    majority_label,
)
from .checkpoint import dumps_canonical
from .data import load_candidates, make_code
from .funcparse import CodeFunction

MIN_ANSWER_VOTES = 3

# Correctness rules shown to annotators next to each task.
GUIDELINES = [
    "Label 1 when the code covers everything the query asks for, or goes beyond it.",
    "Label 1 when the code fully handles one recognized variant of the request.",
    "Label 0 when the code covers half or less of what the query asks for.",
    "Label 0 when only a small part of the code relates to the query at all.",
]


@dataclass
class PairEntry:
    pair_id: str
    query_text: str
    code: CodeFunction
    intent_votes: dict[str, int] = field(default_factory=dict)  # annotator -> 1 yes / 0 no
    answer_votes: dict[str, int] = field(default_factory=dict)

    def is_complete(self) -> bool:
        if len(self.answer_votes) >= MIN_ANSWER_VOTES:
            return True
        # a decisive no-intent majority retires the pair from circulation
        if len(self.intent_votes) >= MIN_ANSWER_VOTES:
            return majority_label(list(self.intent_votes.values())) == 0
        return False


class AnnotationStore:
    """Append-only vote log with an in-memory index.

    All writes funnel through a single lock; the log is replayed at
    startup through the same apply path used for live submissions.
    """

    def __init__(self, pairs_path, log_path, policy: AgreementPolicy | None = None):
        self.log_path = log_path
        self.policy = policy or AgreementPolicy(min_votes=MIN_ANSWER_VOTES)
        self.lock = threading.Lock()
        self.pairs: dict[str, PairEntry] = {}
        for pair_id, query_text, code_text in load_candidates(pairs_path):
            self.pairs[pair_id] = PairEntry(
                pair_id=pair_id,
                query_text=query_text.lower(),
                code=make_code(code_text),
            )
        self.annotators: dict[str, str | None] = {}
        self.assigned: set[tuple[str, str]] = set()
        self._replay()

    # -- log -----------------------------------------------------------------

    def _replay(self) -> None:
        try:
            f = open(self.log_path, encoding="utf-8")
        except FileNotFoundError:
            return
        with f:
            for line in f:
                if not line.strip():
                    continue
                event = json.loads(line)
                if event["event"] == "register":
                    self._apply_register(event["annotator_id"], event.get("name"))
                elif event["event"] == "judgment":
                    self.assigned.add((event["annotator_id"], event["pair_id"]))
                    self._apply_judgment(
                        event["pair_id"],
                        event["annotator_id"],
                        event["intent"],
                        event.get("answer"),
                    )

    def _append(self, event: dict) -> None:
        with open(self.log_path, "a", encoding="utf-8") as f:
            f.write(json.dumps(event, ensure_ascii=False) + "\n")

    # -- state transitions ----------------------------------------------------

    def _apply_register(self, annotator_id: str, name: str | None) -> None:
        self.annotators[annotator_id] = name

    def _apply_judgment(self, pair_id, annotator_id, intent, answer) -> None:
        entry = self.pairs[pair_id]
        entry.intent_votes[annotator_id] = 1 if intent == "yes" else 0
        if answer is not None:
            entry.answer_votes[annotator_id] = int(answer)

    # -- operations -------------------------------------------------------------

    def register(self, name: str | None = None) -> str:
        with self.lock:
            annotator_id = f"ann-{len(self.annotators) + 1:04d}"
            self._apply_register(annotator_id, name)
            self._append(
                {"event": "register", "annotator_id": annotator_id, "name": name,
                 "ts": time.time()}
            )
            return annotator_id

    def _check_annotator(self, annotator_id: str) -> None:
        if annotator_id not in self.annotators:
            raise HTTPException(status_code=401, detail=f"unknown annotator {annotator_id!r}")

    def next_task(self, annotator_id: str) -> dict | None:
        with self.lock:
            self._check_annotator(annotator_id)
            open_pairs = [
                e
                for e in self.pairs.values()
                if not e.is_complete() and annotator_id not in e.intent_votes
            ]
            if not open_pairs:
                return None
            entry = min(open_pairs, key=lambda e: (len(e.answer_votes), e.pair_id))
            self.assigned.add((annotator_id, entry.pair_id))
            return {
                "pair_id": entry.pair_id,
                "query": entry.query_text,
                "code": {
                    "header": entry.code.header,
                    "docstring": entry.code.docstring,
                    "body": entry.code.body,
                },
                "guidelines": GUIDELINES,
            }

    def submit(self, pair_id: str, annotator_id: str, intent: str, answer: int | None):
        with self.lock:
            self._check_annotator(annotator_id)
            if pair_id not in self.pairs:
                raise HTTPException(status_code=400, detail=f"unknown pair {pair_id!r}")
            if intent not in ("yes", "no"):
                raise HTTPException(status_code=400, detail="intent must be 'yes' or 'no'")
            if intent == "no" and answer is not None:
                raise HTTPException(
                    status_code=400,
                    detail="protocol violation: no-intent judgments carry no answer",
                )
            if intent == "yes" and answer not in (0, 1):
                raise HTTPException(
                    status_code=400,
                    detail="yes-intent judgments need an answer of 0 or 1",
                )
            if (annotator_id, pair_id) not in self.assigned:
                raise HTTPException(
                    status_code=400, detail="pair was not assigned to this annotator"
                )
            entry = self.pairs[pair_id]
            if annotator_id in entry.intent_votes:
                raise HTTPException(
                    status_code=409, detail="annotator already voted on this pair"
                )
            self._apply_judgment(pair_id, annotator_id, intent, answer)
            self._append(
                {
                    "event": "judgment",
                    "pair_id": pair_id,
                    "annotator_id": annotator_id,
                    "intent": intent,
                    "answer": answer,
                    "ts": time.time(),
                }
            )
            return {"accepted": True, "pair_id": pair_id}

    # -- read-only views ---------------------------------------------------------

    def progress(self) -> dict:
        with self.lock:
            done = sum(1 for e in self.pairs.values() if e.is_complete())
            per_annotator = {
                a: sum(1 for e in self.pairs.values() if a in e.intent_votes)
                for a in sorted(self.annotators)
            }
            return {
                "pairs_total": len(self.pairs),
                "pairs_complete": done,
                "votes_total": sum(len(e.intent_votes) for e in self.pairs.values()),
                "annotators": len(self.annotators),
                "per_annotator": per_annotator,
            }

    def _alpha_or_none(self, votes_by_item: dict[str, list[int]]):
        try:
            return krippendorff_alpha(votes_by_item), False
        except DegenerateAgreementError:
            # every pairable vote identical: expected disagreement is zero,
            # observed agreement is perfect; report it as 1.0, flagged
            return 1.0, True
        except ValueError:
            return None, False

    def agreement_report(self) -> dict:
        with self.lock:
            return self._agreement_report_locked()

    def _agreement_report_locked(self) -> dict:
        answer_votes = {
            pid: sorted(e.answer_votes.items()) for pid, e in self.pairs.items()
        }
        intent_votes = {
            pid: sorted(e.intent_votes.items()) for pid, e in self.pairs.items()
        }
        answer_lists = {pid: [v for _, v in vs] for pid, vs in answer_votes.items() if vs}
        intent_lists = {pid: [v for _, v in vs] for pid, vs in intent_votes.items() if vs}
        alpha_answer, degen_a = self._alpha_or_none(answer_lists)
        alpha_intent, degen_i = self._alpha_or_none(intent_lists)
        return {
            "alpha_answer": alpha_answer,
            "alpha_answer_degenerate": degen_a,
            "alpha_intent": alpha_intent,
            "alpha_intent_degenerate": degen_i,
            "per_item_share": {
                pid: agreement_share(vs) for pid, vs in sorted(answer_lists.items())
            },
        }

    def export(self) -> dict:
        """Retained labeled pairs plus the agreement report.

        A pair is exported when a strict majority voted intent=yes, it has
        at least three answer votes, and the answer votes pass the
        agreement policy with a resolved majority label.
        """
        with self.lock:
            eligible: dict[str, list[int]] = {}
            for pid in sorted(self.pairs):
                entry = self.pairs[pid]
                if not entry.intent_votes:
                    continue
                if majority_label(list(entry.intent_votes.values())) != 1:
                    continue
                if len(entry.answer_votes) < MIN_ANSWER_VOTES:
                    continue
                eligible[pid] = [v for _, v in sorted(entry.answer_votes.items())]
            retained = filter_by_agreement(eligible, self.policy)
            pairs_out = []
            for pid in retained:
                entry = self.pairs[pid]
                label = majority_label(eligible[pid])
                pairs_out.append(
                    {
                        "pair_id": pid,
                        "query": entry.query_text,
                        "code": entry.code.raw_text,
                        "label": label,
                        "votes": eligible[pid],
                    }
                )
            report = self._agreement_report_locked()
            report["retained"] = retained
            report["removed"] = [p for p in sorted(self.pairs) if p not in set(retained)]
            return {"pairs": pairs_out, "report": report}


class RegisterIn(BaseModel):
    name: str | None = None


class JudgmentIn(BaseModel):
    pair_id: str
    annotator_id: str
    intent: str
    answer: int | None = None


def create_app(pairs_path, log_path, policy: AgreementPolicy | None = None) -> FastAPI:
    store = AnnotationStore(pairs_path, log_path, policy)
    app = FastAPI(title="codematch annotation service")
    app.state.store = store

    @app.post("/annotators")
    def register(body: RegisterIn):
        return {"annotator_id": store.register(body.name)}

    @app.get("/tasks/next")
    def next_task(annotator: str = QueryParam(...)):
        task = store.next_task(annotator)
        if task is None:
            return {"task": None, "done": True}
        return {"task": task, "done": False}

    @app.post("/judgments")
    def submit(body: JudgmentIn):
        return store.submit(body.pair_id, body.annotator_id, body.intent, body.answer)

    @app.get("/progress")
    def progress():
        return store.progress()

    @app.get("/agreement")
    def agreement():
        return store.agreement_report()

    @app.get("/export")
    def export():
        # canonical bytes so replaying the log reproduces the export exactly
        return Response(
            content=dumps_canonical(store.export()) + "\n",
            media_type="application/json",
        )

    return app
