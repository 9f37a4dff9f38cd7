"""Release acceptance suite.

Each test covers one release criterion at its stated tolerance and prints a
``[ACCEPTANCE] <criterion>: PASS/FAIL`` line (run with ``pytest -s`` to see
the verdict lines as they happen).
"""
import struct
import subprocess
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import T5_DIST, T5_GRAY
from dc2g.benchmark import BenchmarkConfig, run_benchmark, sample_starts, write_csv, write_summary
from dc2g.costmap import decode_c2g, dijkstra_cost_to_go, encode_c2g, traversable_mask
from dc2g.dataset import WorldSpec, build_training_set, generate_world, seal_world
from dc2g.errors import BadImageDims, MalformedFrame
from dc2g.estimator import HANDSHAKE, BridgeClient, HeuristicEstimator, OracleEstimator
from dc2g.evalmetrics import TRAVERSABLE_TASK, classify_pixels, precision_recall
from dc2g.planner import (
    DC2GPlanner,
    EpisodeStatus,
    FrontierPlanner,
    OraclePlanner,
    run_episode,
)
from dc2g.semantic import png_bytes_to_rgb, resize_nearest
from dc2g.sim import Heading, Pose, SensorConfig, new_belief, observe
from test_costmap import bfs_reference


@contextmanager
def verdict(name):
    try:
        yield
    except Exception:
        print(f"[ACCEPTANCE] {name}: FAIL")
        raise
    print(f"[ACCEPTANCE] {name}: PASS")


def test_c1_dijkstra_matches_bruteforce_bfs():
    with verdict("dijkstra-oracle-equivalence (200 grids, tol 0, <5s)"):
        rng = np.random.default_rng(123)
        t0 = time.perf_counter()
        checked = 0
        while checked < 200:
            density = rng.uniform(0.35, 0.75)
            tr = rng.random((20, 20)) < density
            open_cells = np.argwhere(tr)
            if len(open_cells) == 0:
                continue
            goal = tuple(open_cells[rng.integers(len(open_cells))])
            field = dijkstra_cost_to_go(tr, goal)
            assert np.array_equal(field.dist, bfs_reference(tr, goal))
            checked += 1
        elapsed = time.perf_counter() - t0
        assert elapsed < 5.0, f"took {elapsed:.2f}s"


def test_c2_encoding_golden_t5(palette, t5):
    with verdict("encoding-golden-T5 (exact grays, strict decode ordering)"):
        world, goal = t5
        field = dijkstra_cost_to_go(traversable_mask(world, palette), goal)
        assert np.array_equal(field.dist, T5_DIST)
        img = encode_c2g(field)
        assert sorted(set(T5_GRAY.values())) == [43, 85, 128, 170, 213, 255]
        for r in range(5):
            for c in range(5):
                d = T5_DIST[r, c]
                expected = (T5_GRAY[d],) * 3 if d >= 0 else (255, 0, 0)
                assert tuple(img[r, c]) == expected, (r, c)
        scores = decode_c2g(img, 5, 5)
        assert np.array_equal(np.isnan(scores), ~field.finite_mask())
        finite = field.finite_mask()
        d, s = field.dist[finite], scores[finite]
        for v in np.unique(d):
            assert (s[d == v] == s[d == v][0]).all()
        per_distance = [s[d == v][0] for v in np.unique(d)]
        assert (np.diff(per_distance) < 0).all()


def test_c3_training_pair_arithmetic(tmp_path, palette):
    with verdict("training-pair-arithmetic (31x256 -> 7936 pairs, <2min)"):
        worlds = [generate_world(WorldSpec(seed=s), palette) for s in range(31)]
        t0 = time.perf_counter()
        manifest = build_training_set(worlds, 256, tmp_path, palette=palette, render_size=50)
        elapsed = time.perf_counter() - t0
        assert len(manifest["pairs"]) == 31 * 256 == 7936
        assert elapsed < 120.0, f"generation took {elapsed:.1f}s"
        # mask containment + unmasking consistency on every emitted pair
        full_encodings = {}
        for i, (world, goal) in enumerate(worlds):
            full_encodings[f"w{i:04d}"] = (
                world.to_rgb(palette),
                encode_c2g(dijkstra_cost_to_go(traversable_mask(world, palette), goal)),
            )
        for pair in manifest["pairs"]:
            inp = png_bytes_to_rgb((tmp_path / pair["input"]).read_bytes())
            tgt = png_bytes_to_rgb((tmp_path / pair["target"]).read_bytes())
            in_black = ~inp.any(axis=2)
            tgt_black = ~tgt.any(axis=2)
            assert not (in_black & ~tgt_black).any(), pair  # target masked wherever input is
            full_map, full_c2g = full_encodings[pair["world"]]
            mask = ~in_black
            assert np.array_equal(inp[mask], full_map[mask]), pair
            assert np.array_equal(tgt[mask], full_c2g[mask]), pair


def _planners_for(world, goal, palette, cfg):
    return {
        "dc2g:oracle": lambda: DC2GPlanner(OracleEstimator(world, palette, goal), palette, cfg),
        "dc2g:heuristic": lambda: DC2GPlanner(HeuristicEstimator(palette), palette, cfg),
        "frontier": lambda: FrontierPlanner(palette, cfg),
    }


def test_c4_completeness_and_give_up(palette):
    with verdict("completeness (100 solvable worlds, 10 sealed -> give up)"):
        cfg = SensorConfig()
        for seed in range(100):
            world, goal = generate_world(WorldSpec(seed=seed), palette)
            start = sample_starts(world, palette, 1, f"c4:{seed}")[0]
            for name, make in _planners_for(world, goal, palette, cfg).items():
                result = run_episode(world, palette, goal, start, make(), cfg, max_steps=10_000)
                assert result.status is EpisodeStatus.REACHED_GOAL, (seed, name, result.status)
        for seed in range(10):
            world, goal = generate_world(WorldSpec(seed=seed), palette)
            sealed = seal_world(world, palette)
            start = sample_starts(sealed, palette, 1, f"c4s:{seed}")[0]
            for name, make in _planners_for(sealed, goal, palette, cfg).items():
                result = run_episode(sealed, palette, goal, start, make(), cfg, max_steps=10_000)
                assert result.status is EpisodeStatus.GAVE_UP, (seed, name, result.status)


@pytest.fixture(scope="module")
def context_benchmark():
    config = BenchmarkConfig(
        seed=0,
        worlds=100,
        starts_per_world=3,
        planners=("oracle", "frontier", "dc2g:oracle", "dc2g:heuristic"),
        max_steps=10_000,
        jobs=2,
    )
    t0 = time.perf_counter()
    rows, summary = run_benchmark(config)
    elapsed = time.perf_counter() - t0
    return rows, summary, elapsed


def test_c5_context_benefit(context_benchmark):
    with verdict("context-benefit (dc2g beats frontier, ratio >= 1.5, <2min)"):
        rows, summary, elapsed = context_benchmark
        assert elapsed < 120.0, f"benchmark took {elapsed:.1f}s"
        assert all(r.status == EpisodeStatus.REACHED_GOAL.value for r in rows)
        mean_steps = {
            label: np.mean([r.steps for r in rows if r.label() == label])
            for label in ("frontier", "dc2g:oracle", "dc2g:heuristic")
        }
        assert summary["dc2g:oracle"]["mean_extra_pct"] < summary["frontier"]["mean_extra_pct"]
        ratio = mean_steps["frontier"] / mean_steps["dc2g:oracle"]
        assert ratio >= 1.5, f"frontier/dc2g step ratio {ratio:.3f}"
        control = mean_steps["frontier"] / mean_steps["dc2g:heuristic"]
        assert control < 1.5, f"heuristic control unexpectedly shows a gap ({control:.3f})"
        print(
            f"  (ratio={ratio:.2f}, control={control:.2f}, "
            f"extra: dc2g={summary['dc2g:oracle']['mean_extra_pct']:.1f}% "
            f"frontier={summary['frontier']['mean_extra_pct']:.1f}%, {elapsed:.0f}s)"
        )


def test_c6_oracle_planner_optimality(context_benchmark, palette):
    with verdict("oracle-optimality (extra 0 on all rows, paths == dijkstra)"):
        rows, _, _ = context_benchmark
        oracle_rows = [r for r in rows if r.planner == "oracle"]
        assert len(oracle_rows) == 300
        assert all(r.extra_pct == 0.0 for r in oracle_rows)
        # the shared step-counting convention keeps every planner at or above
        # the oracle's action count
        assert all(r.extra_pct >= 0.0 for r in rows if r.extra_pct is not None)
        checked = 0
        for seed in range(50):
            world, goal = generate_world(WorldSpec(seed=seed), palette)
            field = dijkstra_cost_to_go(traversable_mask(world, palette), goal)
            planner = OraclePlanner(world, palette, goal)
            for start in sample_starts(world, palette, 2, f"c6:{seed}"):
                outcome = planner.plan_from(start)
                assert len(outcome.cell_path) - 1 == field.dist[start.row, start.col]
                checked += 1
        assert checked == 100


def test_c7_metric_consistency(palette):
    with verdict("metric-consistency (classify o encode == finite; PR hand counts)"):
        rng = np.random.default_rng(2024)
        for k in range(50):
            if k % 2 == 0:
                world, goal = generate_world(WorldSpec(seed=k, height=20, width=20), palette)
                tr = traversable_mask(world, palette)
            else:
                tr = rng.random((20, 20)) < rng.uniform(0.4, 0.7)
                open_cells = np.argwhere(tr)
                if len(open_cells) == 0:
                    continue
                goal = tuple(open_cells[rng.integers(len(open_cells))])
            field = dijkstra_cost_to_go(tr, goal)
            assert np.array_equal(classify_pixels(encode_c2g(field), TRAVERSABLE_TASK), field.finite_mask())
        for k in range(10):
            pred = rng.random((4, 4)) < 0.5
            truth = rng.random((4, 4)) < 0.5
            tp = sum(1 for i in range(4) for j in range(4) if pred[i, j] and truth[i, j])
            fp = sum(1 for i in range(4) for j in range(4) if pred[i, j] and not truth[i, j])
            fn = sum(1 for i in range(4) for j in range(4) if not pred[i, j] and truth[i, j])
            p, r = precision_recall(pred, truth)
            assert p == (tp / (tp + fp) if tp + fp else None)
            assert r == (tp / (tp + fn) if tp + fn else None)


def test_c8_bridge_conformance(palette):
    with verdict("bridge-conformance (20 beliefs byte-identical, errors typed)"):
        world, goal = generate_world(WorldSpec(seed=8), palette)
        est = OracleEstimator(world, palette, goal)
        server_cmd = [sys.executable, "-m", "dc2g.cli", "serve-oracle", "--world-seed", "8"]
        client = BridgeClient.spawn(server_cmd, timeout_s=60)
        rng = np.random.default_rng(5)
        belief = new_belief((50, 50), palette)
        cfg = SensorConfig()
        try:
            for _ in range(20):
                tr = traversable_mask(world, palette)
                open_cells = np.argwhere(tr)
                rc = open_cells[rng.integers(len(open_cells))]
                observe(world, belief, Pose(int(rc[0]), int(rc[1]), Heading(int(rng.integers(4)))), cfg)
                img = resize_nearest(belief.to_rgb(palette), 256, 256)
                assert np.array_equal(client.estimate(img), est.estimate(img))
        finally:
            client.close()

        bad_dims_server = (
            "import sys, struct, io\n"
            "import numpy as np\n"
            "from PIL import Image\n"
            "out, inp = sys.stdout.buffer, sys.stdin.buffer\n"
            "out.write(b'DC2G/1 256 256\\n'); out.flush()\n"
            "inp.read(15)\n"
            "head = inp.read(4); inp.read(struct.unpack('>I', head)[0])\n"
            "buf = io.BytesIO(); Image.fromarray(np.zeros((100,100,3),np.uint8)).save(buf,'PNG')\n"
            "p = buf.getvalue(); out.write(struct.pack('>I', len(p))); out.write(p); out.flush()\n"
        )
        client = BridgeClient.spawn([sys.executable, "-c", bad_dims_server], timeout_s=30)
        with pytest.raises(BadImageDims):
            client.estimate(np.zeros((256, 256, 3), dtype=np.uint8))
        client.close()

        garbage_server = (
            "import sys\n"
            "out, inp = sys.stdout.buffer, sys.stdin.buffer\n"
            "out.write(b'DC2G/1 256 256\\n'); out.flush()\n"
            "inp.read(15)\n"
            "import struct\n"
            "head = inp.read(4); inp.read(struct.unpack('>I', head)[0])\n"
            "out.write(struct.pack('>I', 9) + b'not a png'); out.flush()\n"
        )
        client = BridgeClient.spawn([sys.executable, "-c", garbage_server], timeout_s=30)
        with pytest.raises(MalformedFrame):
            client.estimate(np.zeros((256, 256, 3), dtype=np.uint8))
        client.close()

        # a zero-length request frame makes the server exit nonzero, writing nothing
        proc = subprocess.Popen(server_cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=subprocess.DEVNULL)
        out, _ = proc.communicate(HANDSHAKE + struct.pack(">I", 0), timeout=60)
        assert proc.returncode != 0
        assert out == HANDSHAKE


def test_c9_benchmark_determinism(tmp_path):
    with verdict("benchmark-determinism (byte-identical CSV across runs and jobs)"):
        base = dict(
            seed=21,
            worlds=5,
            starts_per_world=2,
            planners=("oracle", "frontier", "dc2g:oracle"),
            max_steps=10_000,
        )
        outputs = []
        for run_idx, jobs in enumerate((1, 1, 2)):
            rows, summary = run_benchmark(BenchmarkConfig(jobs=jobs, **base))
            csv_path = tmp_path / f"r{run_idx}.csv"
            json_path = tmp_path / f"r{run_idx}.json"
            write_csv(rows, csv_path)
            write_summary(summary, json_path)
            outputs.append((csv_path.read_bytes(), json_path.read_bytes()))
        assert outputs[0] == outputs[1] == outputs[2]
