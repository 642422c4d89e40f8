"""HTTP service exposing scoring, segmentation, and policy tuning.

All payloads are JSON (images travel base64-encoded). The model is read-only
for the server's lifetime; the policy is swapped atomically under a lock, so
concurrent scoring requests each see one consistent policy.

Endpoints:
  GET  /api/model/summary          model facts (K', kept ids, calibration)
  POST /api/score                  {"image": b64 png, "id"?, "anomaly_map"?}
                                   -> AnomalyReport; with a map upload the
                                   response adds its classified component and
                                   background-masked peak score
  POST /api/segment                {"image": b64 png, "id"?} -> RLE masks
  GET  /api/policy | PUT /api/policy
  POST /api/eval                   {"dataset": path} -> AUROC table + records
  GET  /api/images/<id>/overlay    rendered component overlay (PNG)
"""

import base64
import io
import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
from PIL import Image as PILImage

from . import detector as det
from .evaluation import run_benchmark
from .exceptions import PartwiseError
from .policy import PolicyConfig
from .segmentation import render_overlay

_OVERLAY_RE = re.compile(r"^/api/images/([A-Za-z0-9_.-]+)/overlay$")


def mask_to_rle(mask) -> list:
    """Row-major run lengths, alternating 0-run/1-run and starting with zeros."""
    flat = np.asarray(mask).astype(np.uint8).ravel()
    runs = []
    current, run = 0, 0
    for v in flat:
        if v == current:
            run += 1
        else:
            runs.append(run)
            current, run = v, 1
    runs.append(run)
    return [int(r) for r in runs]


def rle_to_mask(runs, shape) -> np.ndarray:
    total = int(np.prod(shape))
    flat = np.zeros(total, dtype=np.uint8)
    pos, val = 0, 0
    for run in runs:
        if val:
            flat[pos : pos + run] = 1
        pos += run
        val ^= 1
    if pos != total:
        raise ValueError(f"run lengths cover {pos} pixels, mask has {total}")
    return flat.reshape(shape).astype(bool)


class ServiceState:
    def __init__(self, model, policy: PolicyConfig | None = None):
        self.model = model
        self._policy = (policy or PolicyConfig()).validate()
        self._lock = threading.Lock()
        self._uploads = {}
        self._counter = 0

    @property
    def policy(self) -> PolicyConfig:
        with self._lock:
            return self._policy

    def set_policy(self, policy: PolicyConfig):
        with self._lock:
            self._policy = policy.validate()

    def register_overlay(self, image_id, png_bytes):
        with self._lock:
            self._uploads[image_id] = png_bytes

    def overlay_for(self, image_id):
        with self._lock:
            return self._uploads.get(image_id)

    def next_id(self) -> str:
        with self._lock:
            self._counter += 1
            return f"upload-{self._counter:04d}"


def _decode_image(payload: dict) -> np.ndarray:
    if "image" not in payload:
        raise ValueError("request body needs an 'image' field (base64 PNG)")
    raw = base64.b64decode(payload["image"])
    with PILImage.open(io.BytesIO(raw)) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def _decode_anomaly_map(payload: dict, size: int):
    """Optional grayscale anomaly-map upload, rescaled to [0, 1] at model size."""
    if "anomaly_map" not in payload:
        return None
    raw = base64.b64decode(payload["anomaly_map"])
    with PILImage.open(io.BytesIO(raw)) as im:
        gray = im.convert("L").resize((size, size), PILImage.BILINEAR)
    return np.asarray(gray, dtype=np.float64) / 255.0


def _overlay_png(state, img, image_id) -> bytes:
    seg, _masks, resized = det.segment_only(img, state.model, image_id)
    overlay = render_overlay(resized, seg, state.model.kept_ids)
    buf = io.BytesIO()
    PILImage.fromarray(overlay, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


class ApiHandler(BaseHTTPRequestHandler):
    state: ServiceState = None  # installed by make_server

    # -- plumbing ---------------------------------------------------------
    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, code, body, content_type="application/json"):
        data = body if isinstance(body, bytes) else json.dumps(body, sort_keys=True).encode()
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()
        self.wfile.write(data)

    def _error(self, code, message):
        self._send(code, {"error": str(message)})

    def _read_json(self):
        length = int(self.headers.get("Content-Length", 0))
        if length <= 0:
            return {}
        return json.loads(self.rfile.read(length).decode("utf-8"))

    def do_OPTIONS(self):
        self._send(204, b"", content_type="text/plain")

    # -- endpoints --------------------------------------------------------
    def do_GET(self):
        try:
            if self.path == "/api/model/summary":
                model = self.state.model
                self._send(
                    200,
                    {
                        "k_total": int(model.k_total),
                        "kept_ids": [int(k) for k in model.kept_ids],
                        "noise_ids": [int(k) for k in model.noise_ids],
                        "background_ids": [int(k) for k in model.background_ids],
                        "scales": {str(k): v for k, v in model.scales.items()},
                        "n_train": int(model.n_train),
                        "input_size": int(model.config["pipeline"]["input_size"]),
                        "train_means": model.train_means,
                    },
                )
                return
            if self.path == "/api/policy":
                self._send(200, self.state.policy.to_dict())
                return
            m = _OVERLAY_RE.match(self.path)
            if m:
                png = self.state.overlay_for(m.group(1))
                if png is None:
                    self._error(404, f"no overlay stored for id {m.group(1)!r}")
                else:
                    self._send(200, png, content_type="image/png")
                return
            self._error(404, f"unknown path {self.path}")
        except Exception as exc:  # noqa: BLE001 - report, don't kill the thread
            self._error(500, exc)

    def do_PUT(self):
        try:
            if self.path == "/api/policy":
                body = self._read_json()
                self.state.set_policy(PolicyConfig.from_dict(body))
                self._send(200, self.state.policy.to_dict())
                return
            self._error(404, f"unknown path {self.path}")
        except (PartwiseError, ValueError, KeyError) as exc:
            self._error(400, exc)
        except Exception as exc:  # noqa: BLE001
            self._error(500, exc)

    def do_POST(self):
        try:
            if self.path == "/api/score":
                payload = self._read_json()
                img = _decode_image(payload)
                image_id = str(payload.get("id") or self.state.next_id())
                policy = self.state.policy
                report = det.score_image(img, self.state.model, policy=policy, image_id=image_id)
                self.state.register_overlay(image_id, _overlay_png(self.state, img, image_id))
                record = report.to_record()
                record["overlay"] = f"/api/images/{image_id}/overlay"
                amap = _decode_anomaly_map(
                    payload, int(self.state.model.config["pipeline"]["input_size"])
                )
                if amap is not None:
                    seg, _masks, _resized = det.segment_only(img, self.state.model, image_id)
                    label, masked = det.classify_anomaly(amap, seg, self.state.model, policy)
                    record["classified_component"] = label
                    record["masked_peak_score"] = masked
                self._send(200, record)
                return
            if self.path == "/api/segment":
                payload = self._read_json()
                img = _decode_image(payload)
                image_id = str(payload.get("id") or self.state.next_id())
                seg, masks, resized = det.segment_only(img, self.state.model, image_id)
                self.state.register_overlay(image_id, _overlay_png(self.state, img, image_id))
                body = {
                    "id": image_id,
                    "size": [int(resized.shape[0]), int(resized.shape[1])],
                    "components": [
                        {
                            "id": int(k),
                            "area": int(np.asarray(masks[k]).sum()),
                            "rle": mask_to_rle(masks[k]),
                        }
                        for k in self.state.model.kept_ids
                    ],
                    "overlay": f"/api/images/{image_id}/overlay",
                }
                self._send(200, body)
                return
            if self.path == "/api/eval":
                payload = self._read_json()
                dataset = payload.get("dataset")
                if not dataset:
                    self._error(400, "eval needs a 'dataset' path")
                    return
                result = run_benchmark(self.state.model, self.state.policy, dataset)
                self._send(
                    200,
                    {
                        "auroc_overall": result.auroc_overall,
                        "auroc_by_kind": result.auroc_by_kind,
                        "records": result.records,
                    },
                )
                return
            self._error(404, f"unknown path {self.path}")
        except (PartwiseError, ValueError, KeyError) as exc:
            self._error(400, exc)
        except Exception as exc:  # noqa: BLE001
            self._error(500, exc)


def make_server(model, policy=None, host="127.0.0.1", port=8123) -> ThreadingHTTPServer:
    state = ServiceState(model, policy)
    handler = type("BoundApiHandler", (ApiHandler,), {"state": state})
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(model, policy=None, host="127.0.0.1", port=8123):
    server = make_server(model, policy, host, port)
    print(f"serving on http://{host}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
