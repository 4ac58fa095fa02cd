"""Submit a generation job to the HTTP service and poll it to completion.

Starts the service in-process on a free port, POSTs a sketch with parameters
to /api/jobs (answered with 202 + a job id), polls GET /api/jobs/{id} until
the state is done, and saves the returned structure. The same API drives the
browser studio.
"""
import base64
import pathlib
import socket
import tempfile
import threading
import time

import httpx
import numpy as np
import uvicorn

from topoforge import RasterSketch
from topoforge import pngio
from topoforge.service import ServiceSettings, create_app

OUT = pathlib.Path(__file__).parent / "output"


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def main() -> None:
    OUT.mkdir(exist_ok=True)
    n = 32
    px = np.zeros((n, n, 4), dtype=np.uint8)
    px[:, :] = (0, 0, 0, 255)
    px[1, n - 2] = (255, 0, 0, 255)
    px[n - 1, 8] = (0, 255, 0, 255)
    px[12, 0] = (0, 255, 0, 255)
    sketch_b64 = base64.b64encode(pngio.sketch_to_png_bytes(RasterSketch(px))).decode()

    port = free_port()
    settings = ServiceSettings(output_root=pathlib.Path(tempfile.mkdtemp()), grid=(n, n))
    server = uvicorn.Server(
        uvicorn.Config(create_app(settings), host="127.0.0.1", port=port, log_level="warning")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    base_url = f"http://127.0.0.1:{port}"
    while not server.started:
        time.sleep(0.05)

    print("palette roles:", [c["role"] for c in httpx.get(f"{base_url}/api/palette").json()["codes"]])

    response = httpx.post(
        f"{base_url}/api/jobs",
        json={
            "sketch_png_b64": sketch_b64,
            "volume_fraction": 0.3,
            "load_angle_deg": 270.0,
            "batch_count": 2,
            "seed": 5,
        },
    )
    job_id = response.json()["job_id"]
    print(f"submitted: HTTP {response.status_code}, job {job_id}")

    while True:
        payload = httpx.get(f"{base_url}/api/jobs/{job_id}").json()
        print(f"  state: {payload['state']}")
        if payload["state"] in ("done", "failed"):
            break
        time.sleep(0.5)

    for i, result in enumerate(payload["results"]):
        print(
            f"result {i}: compliance {result['compliance']:.3f}, "
            f"vf {result['vf_global_pct']:.2f}%"
        )
        (OUT / f"service_result_{i}.png").write_bytes(
            base64.b64decode(result["structure_png_b64"])
        )
    print(f"wrote structures under {OUT}")

    server.should_exit = True
    thread.join(timeout=10)


if __name__ == "__main__":
    main()
