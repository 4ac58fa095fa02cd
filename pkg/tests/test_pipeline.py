"""Generation backends, evaluation protocol, batch statistics, remote wire."""
from __future__ import annotations

import base64
import json
import math
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from topoforge import (
    BackendUnavailableError,
    DensityField,
    DesignProblem,
    Fixing,
    GenerationParams,
    Load,
    MaterialParams,
    RemoteBackend,
    RemoteProtocolError,
    Role,
    SolverConfig,
    batch_run,
    evaluate_structure,
    generate,
    optimize,
    remote_generate,
)
from topoforge import pngio
from topoforge.pipeline import (
    CSV_COLUMNS,
    mean_and_sample_std,
    write_batch_csv,
)
from conftest import make_small_problem, random_problem
from oracles import nn_resample


class TestGenerateSimp:
    def test_unseeded_runs_are_bit_identical(self):
        problem = make_small_problem(10)
        params = GenerationParams(volume_fraction=0.4, load_angle_deg=270.0)
        a = generate(problem, params)
        b = generate(problem, params)
        assert np.array_equal(a.rho, b.rho)

    def test_strength_zero_resumes_at_converged_prior(self):
        problem = make_small_problem(12, vf=0.4)
        cfg = SolverConfig(max_iters=100)
        prior = optimize(problem, cfg).field
        params = GenerationParams(volume_fraction=0.4, load_angle_deg=270.0, strength=0.0)
        out = generate(problem, params, prior=prior, cfg=cfg)
        assert np.abs(out.rho - prior.rho).max() <= cfg.change_tol

    def test_strength_one_ignores_prior(self):
        problem = make_small_problem(10)
        params = GenerationParams(volume_fraction=0.4, load_angle_deg=270.0, strength=1.0)
        prior = DensityField.uniform(problem.domain, 1.0)
        with_prior = generate(problem, params, prior=prior)
        without = generate(problem, params)
        assert np.array_equal(with_prior.rho, without.rho)

    def test_seeded_init_jitter_is_deterministic_and_bounded(self):
        from topoforge.pipeline import _simp_init

        problem = make_small_problem(10)
        params7 = GenerationParams(volume_fraction=0.4, load_angle_deg=270.0, seed=7)
        a = _simp_init(problem, params7, None)
        b = _simp_init(problem, params7, None)
        c = _simp_init(
            problem, GenerationParams(volume_fraction=0.4, load_angle_deg=270.0, seed=8), None
        )
        assert np.array_equal(a.rho, b.rho)
        assert not np.array_equal(a.rho, c.rho)
        assert np.abs(a.rho - 0.4).max() <= 0.05 + 1e-12

    def test_masked_generation_freezes_prior_outside_mask(self):
        n = 12
        domain = np.ones((n, n), dtype=bool)
        mask = np.zeros((n, n), dtype=bool)
        mask[:, : n // 2] = True
        problem = DesignProblem(
            nelx=n, nely=n, domain=domain,
            loads=(Load(0.9, 0.9, angle_deg=270.0),),
            fixings=(Fixing(0.0, 0.0, Role.FIX_XY), Fixing(1.0, 0.0, Role.FIX_XY)),
            volume_fraction=0.3, mask=mask,
        )
        rng = np.random.default_rng(0)
        prior = DensityField(np.where(domain, rng.uniform(0.2, 1.0, (n, n)), 0.0), domain)
        params = GenerationParams(volume_fraction=0.3, load_angle_deg=270.0, strength=0.8, seed=3)
        out = generate(problem, params, prior=prior)
        frozen = domain & ~mask
        assert np.array_equal(out.rho[frozen], prior.rho[frozen])

    def test_angle_override_applies(self):
        problem = make_small_problem(10)
        down = generate(problem, GenerationParams(volume_fraction=0.4, load_angle_deg=270.0))
        left = generate(problem, GenerationParams(volume_fraction=0.4, load_angle_deg=180.0))
        assert not np.array_equal(down.rho, left.rho)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            GenerationParams(volume_fraction=0.0, load_angle_deg=0.0)
        with pytest.raises(ValueError):
            GenerationParams(volume_fraction=0.5, load_angle_deg=0.0, strength=1.2)
        with pytest.raises(ValueError):
            GenerationParams(volume_fraction=0.5, load_angle_deg=0.0, backend="magic")
        with pytest.raises(ValueError):
            GenerationParams(volume_fraction=0.5, load_angle_deg=0.0, batch_count=0)


class TestEvaluateStructure:
    def test_solid_domain_beats_sparse_structures(self, eval_problem):
        small = make_small_problem(16, vf=0.2)
        solid = evaluate_structure(DensityField.uniform(small.domain, 1.0), small)
        assert solid.vf_global == 1.0
        assert math.isfinite(solid.compliance)
        rng = np.random.default_rng(5)
        for _ in range(20):
            noise = rng.uniform(0.0, 1.0, size=(16, 16))
            smooth = 0.5 * noise + 0.5 * np.roll(noise, 1, axis=0)
            rep = evaluate_structure(smooth, small, threshold=0.6)
            assert solid.compliance <= rep.compliance

    def test_all_void_reports_infinite_compliance(self):
        problem = make_small_problem(8)
        rep = evaluate_structure(np.zeros((8, 8)), problem)
        assert math.isinf(rep.compliance)
        assert rep.vf_global == 0.0
        assert any("load path" in d for d in rep.diagnostics)
        assert rep.to_dict()["compliance"] is None

    def test_threshold_monotone_in_vf(self):
        problem = make_small_problem(12)
        rng = np.random.default_rng(6)
        gray = rng.uniform(size=(12, 12))
        vfs = [
            evaluate_structure(gray, problem, threshold=t).vf_global
            for t in (0.2, 0.4, 0.6, 0.8)
        ]
        assert all(a >= b for a, b in zip(vfs, vfs[1:]))

    def test_gray_raster_input_resampled_to_grid(self):
        problem = make_small_problem(8)
        big = np.ones((32, 32)) * 0.9
        rep = evaluate_structure(big, problem)
        assert rep.binary.shape == (8, 8)
        assert rep.vf_global == 1.0

    def test_uint8_rasters_are_rescaled(self):
        problem = make_small_problem(8)
        raster = np.full((8, 8), 255, dtype=np.uint8).astype(float)
        rep = evaluate_structure(raster, problem)
        assert rep.vf_global == 1.0

    def test_editable_vf_measured_when_masked(self):
        n = 8
        domain = np.ones((n, n), dtype=bool)
        mask = np.zeros((n, n), dtype=bool)
        mask[:4] = True
        problem = DesignProblem(
            nelx=n, nely=n, domain=domain,
            loads=(Load(0.9, 0.9, angle_deg=270.0),),
            fixings=(Fixing(0.0, 0.0, Role.FIX_XY), Fixing(1.0, 0.0, Role.FIX_XY)),
            volume_fraction=0.5, mask=mask,
        )
        rho = np.zeros((n, n))
        rho[:2] = 1.0  # half the masked rows solid
        rep = evaluate_structure(rho, problem)
        assert rep.vf_editable == pytest.approx(0.5)
        assert rep.vf_global == pytest.approx(2 * n / (n * n))

    def test_backend_agnostic_on_identical_rasters(self):
        problem = make_small_problem(10)
        rng = np.random.default_rng(8)
        gray = rng.uniform(size=(10, 10))
        a = evaluate_structure(gray, problem)
        b = evaluate_structure(gray.copy(), problem)
        assert a.compliance == b.compliance
        assert a.vf_global == b.vf_global


class TestBatchStats:
    def test_textbook_mean_and_std(self):
        assert mean_and_sample_std([1.0, 2.0, 3.0]) == (2.0, 1.0)

    def test_single_value_has_zero_std(self):
        mean, std = mean_and_sample_std([4.2])
        assert (mean, std) == (4.2, 0.0)

    def test_single_run_batch_flagged_degenerate(self):
        problem = make_small_problem(10)
        params = GenerationParams(volume_fraction=0.4, load_angle_deg=270.0, seed=1)
        stats = batch_run(problem, params)
        assert stats.n == 1
        assert stats.compliance_std == 0.0
        assert stats.degenerate_std

    def test_forced_identical_seeds_give_exactly_zero_std(self):
        problem = make_small_problem(10)
        params = GenerationParams(volume_fraction=0.4, load_angle_deg=270.0, batch_count=4, seed=5)
        stats = batch_run(problem, params, seeds=[5, 5, 5, 5])
        assert stats.n == 4
        assert stats.compliance_std == 0.0
        assert stats.vf_std_pct == 0.0

    def test_sequential_seeds_from_base(self):
        problem = make_small_problem(10)
        params = GenerationParams(volume_fraction=0.4, load_angle_deg=270.0, batch_count=3, seed=11)
        stats = batch_run(problem, params)
        assert [r.seed for r in stats.runs] == [11, 12, 13]

    def test_fixed_base_seed_reproduces_the_whole_batch(self):
        problem = make_small_problem(10)
        params = GenerationParams(volume_fraction=0.4, load_angle_deg=270.0, batch_count=3, seed=11)
        a = batch_run(problem, params)
        b = batch_run(problem, params)
        assert a.summary_dict() == b.summary_dict()
        for ra, rb in zip(a.runs, b.runs):
            assert np.array_equal(ra.structure.rho, rb.structure.rho)
            assert ra.report.compliance == rb.report.compliance

    def test_csv_format(self, tmp_path):
        problem = make_small_problem(10)
        params = GenerationParams(volume_fraction=0.4, load_angle_deg=270.0, batch_count=2, seed=2)
        stats = batch_run(problem, params)
        path = tmp_path / "summary.csv"
        write_batch_csv(stats, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 3
        first = lines[1].split(",")
        assert first[0] == "0" and first[1] == "2"
        assert float(first[2]) > 0.0  # compliance round-trips through repr
        assert first[4] == ""  # no mask -> no editable vf

    def test_summary_dict_schema(self):
        problem = make_small_problem(10)
        params = GenerationParams(volume_fraction=0.4, load_angle_deg=270.0, seed=3)
        stats = batch_run(problem, params)
        assert set(stats.summary_dict()) == {
            "n", "compliance_mean", "compliance_std", "vf_mean_pct", "vf_std_pct",
        }


def make_structure_png(n: int, rng: np.random.Generator) -> bytes:
    field = DensityField(rng.uniform(size=(n, n)), np.ones((n, n), dtype=bool))
    return pngio.density_to_png_bytes(field)


class CannedRemote(BaseHTTPRequestHandler):
    """Serves whatever its class attributes say; records the last request."""

    status = 200
    body: bytes = b"{}"
    last_request: dict | None = None

    def do_POST(self):  # noqa: N802 - http.server API
        length = int(self.headers.get("Content-Length", 0))
        CannedRemote.last_request = json.loads(self.rfile.read(length) or b"{}")
        self.send_response(self.status)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(self.body)

    def log_message(self, *args):  # silence test output
        pass


@pytest.fixture()
def canned_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), CannedRemote)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    thread.join(timeout=5)


class TestRemoteBackend:
    def test_echoed_png_decodes_to_matching_field(self, canned_server):
        rng = np.random.default_rng(9)
        n = 10
        png = make_structure_png(n, rng)
        CannedRemote.status = 200
        CannedRemote.body = json.dumps(
            {
                "structure_png_b64": base64.b64encode(png).decode(),
                "meta": {"backend": "canned", "duration_ms": 1},
            }
        ).encode()
        problem = make_small_problem(n)
        params = GenerationParams(
            volume_fraction=0.4, load_angle_deg=270.0, backend="remote", strength=0.5
        )
        out = generate(problem, params, remote=RemoteBackend(url=canned_server))
        assert np.array_equal(out.rho, pngio.gray_from_png_bytes(png))
        sent = CannedRemote.last_request
        assert set(sent) == {
            "sketch_png_b64", "mask_png_b64", "volume_fraction",
            "load_angle_deg", "strength", "seed",
        }
        assert sent["volume_fraction"] == 0.4
        assert sent["strength"] == 0.5

    def test_http_500_maps_to_backend_unavailable(self, canned_server):
        CannedRemote.status = 500
        CannedRemote.body = b"boom"
        problem = make_small_problem(8)
        params = GenerationParams(volume_fraction=0.4, load_angle_deg=270.0, backend="remote")
        with pytest.raises(BackendUnavailableError):
            generate(problem, params, remote=RemoteBackend(url=canned_server))

    def test_wrong_size_resamples_with_warning(self, canned_server):
        rng = np.random.default_rng(10)
        png = make_structure_png(6, rng)  # 6x6 for a 12x12 grid
        CannedRemote.status = 200
        CannedRemote.body = json.dumps(
            {"structure_png_b64": base64.b64encode(png).decode(), "meta": {}}
        ).encode()
        problem = make_small_problem(12)
        params = GenerationParams(volume_fraction=0.4, load_angle_deg=270.0, backend="remote")
        with pytest.warns(UserWarning, match="resampling"):
            out = generate(problem, params, remote=RemoteBackend(url=canned_server))
        want = nn_resample(pngio.gray_from_png_bytes(png), 12, 12)
        assert out.rho == pytest.approx(want)

    def test_malformed_json_is_protocol_error(self, canned_server):
        CannedRemote.status = 200
        CannedRemote.body = b"this is not json"
        with pytest.raises(RemoteProtocolError):
            remote_generate({"volume_fraction": 0.2}, url=canned_server)

    def test_missing_structure_key_is_protocol_error(self, canned_server):
        CannedRemote.status = 200
        CannedRemote.body = b'{"meta": {}}'
        with pytest.raises(RemoteProtocolError):
            remote_generate({"volume_fraction": 0.2}, url=canned_server)

    def test_unreachable_host_is_backend_unavailable(self):
        with pytest.raises(BackendUnavailableError):
            remote_generate({}, url="http://127.0.0.1:9", timeout=0.5)

    def test_remote_without_url_fails(self):
        problem = make_small_problem(8)
        params = GenerationParams(volume_fraction=0.4, load_angle_deg=270.0, backend="remote")
        with pytest.raises(BackendUnavailableError):
            generate(problem, params)


class TestBatchPartialFailure:
    def test_failures_recorded_and_stats_over_successes(self, monkeypatch):
        from topoforge import pipeline as pl

        problem = make_small_problem(10)
        params = GenerationParams(volume_fraction=0.4, load_angle_deg=270.0, batch_count=3, seed=0)
        real = pl.generate_with_info
        calls = {"n": 0}

        def flaky(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] == 2:
                raise BackendUnavailableError("injected")
            return real(*args, **kwargs)

        monkeypatch.setattr(pl, "generate_with_info", flaky)
        stats = pl.batch_run(problem, params)
        assert stats.n == 2
        assert len(stats.runs) == 3
        failed = [r for r in stats.runs if r.error]
        assert len(failed) == 1 and "injected" in failed[0].error
