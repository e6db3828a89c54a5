"""HTTP evaluation service.

Exposes a generated dataset for remote grasp evaluation: clients submit a
grasp for a scene and get back the trial outcome, or score a rectangle
against the stored annotations. Every trial submission is appended to a
durable JSON-lines log with sequential ids that survive restarts.

Grasp coordinates in request bodies use the dataset pixel domain
(x, y, opening in pixels, theta in degrees); jaw_size is in meters and
must match one of the configured jaw plate sizes, so a replayed trial is
bit-identical to a local one.
"""
from __future__ import annotations

import json
import os
import threading
import time
from collections import Counter
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field, field_validator

from .errors import EmptyGroundTruthError, FormatError
from .grasp import Grasp, RectCriterionConfig, rect_match
from .pipeline import Dataset, read_dataset
from .simulate import simulate_grasp, snap_jaw_size

API_PREFIX = "/api/v1"


class SubmissionLog:
    """Append-only JSON-lines submission log.

    Ids are sequential and continue after a restart; each append is
    flushed and fsynced before the id is returned.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._next_id = 1
        if self.path.exists():
            for lineno, raw in enumerate(
                self.path.read_text().splitlines(), start=1
            ):
                if not raw.strip():
                    continue
                try:
                    rec = json.loads(raw)
                    self._next_id = max(self._next_id, int(rec["id"]) + 1)
                except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                    raise FormatError(
                        "bad submission log line", path=self.path, line=lineno
                    ) from None
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a", encoding="utf-8")

    def append(self, record: dict) -> int:
        with self._lock:
            sub_id = self._next_id
            self._next_id += 1
            line = json.dumps({"id": sub_id, **record}, sort_keys=True)
            self._fh.write(line + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())
        return sub_id

    def records(self) -> list[dict]:
        with self._lock:
            self._fh.flush()
        if not self.path.exists():
            return []
        return [
            json.loads(raw)
            for raw in self.path.read_text().splitlines()
            if raw.strip()
        ]

    def close(self) -> None:
        with self._lock:
            self._fh.close()


class TrialRequest(BaseModel):
    x: float = Field(allow_inf_nan=False)
    y: float = Field(allow_inf_nan=False)
    theta: float = Field(allow_inf_nan=False)
    opening: float = Field(gt=0, allow_inf_nan=False)
    jaw_size: float = Field(gt=0, allow_inf_nan=False)
    client: str = "anonymous"

    @field_validator("theta")
    @classmethod
    def theta_in_half_turn(cls, v):
        if not -90.0 < v <= 90.0:
            raise ValueError("theta must be in (-90, 90] degrees")
        return v


class RectEvalRequest(BaseModel):
    x: float = Field(allow_inf_nan=False)
    y: float = Field(allow_inf_nan=False)
    theta: float = Field(allow_inf_nan=False)
    opening: float = Field(gt=0, allow_inf_nan=False)
    jaw_size: float | None = Field(default=None, gt=0, allow_inf_nan=False)
    angle_thresh: float = Field(default=30.0, gt=0)
    iou_thresh: float = Field(default=0.25, gt=0, le=1.0)

    @field_validator("theta")
    @classmethod
    def theta_in_half_turn(cls, v):
        if not -90.0 < v <= 90.0:
            raise ValueError("theta must be in (-90, 90] degrees")
        return v


DEFAULT_RECT_JAW_SIZE = 0.02  # meters; plate size assumed when not given


def create_app(dataset: Dataset, log: SubmissionLog) -> FastAPI:
    app = FastAPI(title="graspkit evaluation service", version="1")
    gripper = dataset.config.gripper

    def get_scene(scene_id: str):
        try:
            return dataset.scenes[scene_id]
        except KeyError:
            raise HTTPException(404, f"unknown scene {scene_id!r}") from None

    def snap_or_422(jaw_size: float) -> float:
        try:
            return snap_jaw_size(jaw_size, gripper)
        except ValueError as e:
            raise HTTPException(422, str(e)) from None

    @app.get(API_PREFIX + "/scenes")
    def list_scenes():
        return {
            "scenes": [
                {
                    "scene_id": sid,
                    "object_id": loaded.scene.obj.object_id,
                    "annotations": len(loaded.annotations),
                    "warning": loaded.warning,
                }
                for sid, loaded in sorted(dataset.scenes.items())
            ]
        }

    @app.get(API_PREFIX + "/scenes/{scene_id}")
    def scene_detail(scene_id: str):
        loaded = get_scene(scene_id)
        scene = loaded.scene
        cam = scene.camera
        return {
            "scene_id": scene_id,
            "object_id": scene.obj.object_id,
            "width": cam.width,
            "height": cam.height,
            "resolution": cam.resolution,
            "mount_height": cam.mount_height,
            "mass": scene.obj.mass,
            "seed": scene.seed,
            "annotations": len(loaded.annotations),
            "warning": loaded.warning,
            "jaw_sizes": list(gripper.jaw_sizes),
            "max_opening": gripper.max_opening,
        }

    @app.post(API_PREFIX + "/scenes/{scene_id}/trials")
    def run_trial(scene_id: str, req: TrialRequest):
        loaded = get_scene(scene_id)
        jaw = snap_or_422(req.jaw_size)
        grasp = Grasp(
            x=req.x,
            y=req.y,
            w=req.opening,
            h=jaw / loaded.scene.camera.resolution,
            theta=req.theta,
        )
        try:
            outcome = simulate_grasp(loaded.scene, grasp, jaw, gripper)
        except ValueError as e:
            raise HTTPException(422, str(e)) from None
        reason = None if outcome.success else outcome.failure_reason.value
        sub_id = log.append(
            {
                "ts": time.time(),
                "scene_id": scene_id,
                "client": req.client,
                "x": req.x,
                "y": req.y,
                "theta": req.theta,
                "opening": req.opening,
                "jaw_size": jaw,
                "success": outcome.success,
                "failure_reason": reason,
            }
        )
        return {
            "submission_id": sub_id,
            "scene_id": scene_id,
            "success": outcome.success,
            "failure_reason": reason,
        }

    @app.post(API_PREFIX + "/scenes/{scene_id}/rect-eval")
    def rect_eval(scene_id: str, req: RectEvalRequest):
        loaded = get_scene(scene_id)
        jaw = snap_or_422(
            req.jaw_size if req.jaw_size is not None else DEFAULT_RECT_JAW_SIZE
        )
        pred = Grasp(
            x=req.x,
            y=req.y,
            w=req.opening,
            h=jaw / loaded.scene.camera.resolution,
            theta=req.theta,
        )
        cfg = RectCriterionConfig(
            angle_thresh=req.angle_thresh, iou_thresh=req.iou_thresh
        )
        try:
            matched, index = rect_match(pred, loaded.ground_truth(), cfg)
        except EmptyGroundTruthError:
            raise HTTPException(
                409, f"scene {scene_id!r} has no annotations to match against"
            ) from None
        return {
            "scene_id": scene_id,
            "matched": matched,
            "matched_index": index,
            "angle_thresh": req.angle_thresh,
            "iou_thresh": req.iou_thresh,
            "jaw_size": jaw,
        }

    @app.get(API_PREFIX + "/stats")
    def stats():
        records = log.records()
        reasons = Counter(
            r["failure_reason"] for r in records if not r["success"]
        )
        return {
            "scenes": len(dataset.scenes),
            "trials": len(records),
            "successes": sum(1 for r in records if r["success"]),
            "failure_reasons": dict(sorted(reasons.items())),
            "clients": len({r["client"] for r in records}),
        }

    return app


def serve(dataset_root, log_path, host: str = "127.0.0.1", port: int = 8000) -> None:
    """Load a dataset and serve it; blocks until interrupted."""
    import uvicorn

    dataset = read_dataset(dataset_root)
    log = SubmissionLog(log_path)
    uvicorn.run(create_app(dataset, log), host=host, port=port)
