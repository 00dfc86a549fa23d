"""HTTP API backing the annotation workbench.

The UI talks to this service exclusively: it fetches the next assigned
announcement, submits per-sentence labels, polls progress, and reads the
agreement dashboard. Authentication is a static annotator token in the
`X-Annotator-Token` header; the server is the authority on every labeling
rule, in particular the Irrelevant-exclusivity constraint.

Endpoint payloads are documented in docs/api_schema.md; field names there are
a fixed contract with the frontend.
"""

from __future__ import annotations

from fastapi import FastAPI, Header, HTTPException
from pydantic import BaseModel, Field

from .agreement import interpret_kappa
from .annotation import (
    AnnotationRecord,
    AnnotationStore,
    AnnotationValidationError,
    NotFoundError,
)
from .labels import LabelSet, Topic


class SubmitPayload(BaseModel):
    sentence_id: str
    labels: list[int] = Field(default_factory=list)
    irrelevant: bool = False
    comment: str | None = None


def create_app(store: AnnotationStore, taxonomy: list[Topic],
               prelabels: dict[str, int | None] | None = None,
               dashboard: dict | None = None,
               show_prelabels: bool = False) -> FastAPI:
    """Wire an annotation store into the HTTP surface consumed by the UI.

    Pre-labels stay hidden from annotators unless `show_prelabels` is set, to
    avoid anchoring them on the retrieval guesses.
    """
    app = FastAPI(title="annotation service")
    topics_payload = [
        {"id": t.id, "name": t.name, "description": t.description}
        for t in sorted(taxonomy, key=lambda t: t.id)
    ]

    def _annotator(token: str | None) -> str:
        if not token:
            raise HTTPException(status_code=401, detail="missing annotator token")
        try:
            store.annotator(token)
        except NotFoundError:
            raise HTTPException(status_code=404,
                                detail=f"unknown annotator {token!r}")
        return token

    @app.get("/api/taxonomy")
    def get_taxonomy():
        return {"topics": topics_payload}

    @app.get("/api/next")
    def next_announcement(x_annotator_token: str | None = Header(default=None)):
        annotator = _annotator(x_annotator_token)
        ann_id = store.next_announcement(annotator)
        progress = store.progress(annotator)
        if ann_id is None:
            return {"announcement": None, "progress": progress}
        sentences = []
        for s in store._sentences_of(ann_id):
            entry = {"id": s.id, "ordinal": s.ordinal, "text": s.text}
            if show_prelabels and prelabels is not None:
                entry["prelabel"] = prelabels.get(s.id)
            sentences.append(entry)
        return {
            "announcement": {"id": ann_id, "sentences": sentences},
            "progress": progress,
        }

    @app.post("/api/annotations", status_code=201)
    def submit(payload: SubmitPayload,
               x_annotator_token: str | None = Header(default=None)):
        annotator = _annotator(x_annotator_token)
        try:
            record = AnnotationRecord(
                sentence_id=payload.sentence_id,
                annotator_id=annotator,
                labels=LabelSet.from_ids(payload.labels),
                irrelevant=payload.irrelevant,
                comment=payload.comment,
            )
            stored = store.record_annotation(record)
        except NotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except (AnnotationValidationError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {
            "sentence_id": stored.sentence_id,
            "annotator_id": stored.annotator_id,
            "version": stored.version,
        }

    @app.get("/api/progress")
    def progress(x_annotator_token: str | None = Header(default=None)):
        annotator = _annotator(x_annotator_token)
        return store.progress(annotator)

    @app.get("/api/agreement/dashboard")
    def agreement_dashboard():
        if dashboard is None:
            raise HTTPException(status_code=404,
                                detail="no agreement export available; run the "
                                       "agreement stage first")
        return dashboard

    @app.get("/api/kappa-band/{value}")
    def kappa_band(value: float):
        try:
            return {"kappa": value, "band": interpret_kappa(value)}
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    return app
