"""Smoke test for the Python extension.

Builds the extension with cargo (unless TRIPGATE_EXT points at a built
library), imports it as `tripgate` and runs the main entry points.

    python3 python/smoke_test.py
    python3 -m pytest python/smoke_test.py
"""

import json
import os
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
ENFORCEMENT_SHARES = ["94%", "4%", "0.9%", "0.5%", "0.5%", "0.2%"]


def _extension_path() -> Path:
    env = os.environ.get("TRIPGATE_EXT")
    if env:
        return Path(env)
    subprocess.run(["cargo", "build", "-p", "tripgate-py"], cwd=ROOT, check=True)
    target = Path(os.environ.get("CARGO_TARGET_DIR", ROOT / "target")) / "debug"
    for name in ("libtripgate_py.so", "libtripgate_py.dylib", "tripgate_py.dll"):
        if (target / name).exists():
            return target / name
    raise FileNotFoundError(f"no built extension in {target}")


def _import_tripgate():
    if "tripgate" in sys.modules:
        return sys.modules["tripgate"]
    libdir = Path(tempfile.mkdtemp(prefix="tripgate-ext-"))
    suffix = ".pyd" if sys.platform == "win32" else ".so"
    shutil.copy(_extension_path(), libdir / f"tripgate{suffix}")
    sys.path.insert(0, str(libdir))
    import tripgate

    return tripgate


tg = _import_tripgate()


def test_enforcement_case_study():
    with tempfile.TemporaryDirectory() as d:
        d = Path(d)
        assert tg.case_study("case-study-1", d) == ["enforcement"]
        corpus = tg.Corpus(str(d / "network.geojson"), d / "trips.csv")
        assert corpus.n_trips == 605
        query_text = (d / "query-enforcement.json").read_text()

        report = corpus.analyze(query_text)
        shown = [row["display"] for row in report["shares"]["rows"]]
        assert shown == ENFORCEMENT_SHARES, shown
        assert report["shares"]["total"] == 585
        assert len(corpus.filter(query_text)) == len(report["trip_set"]["entries"])
        assert "Total" in tg.shares_text(report)

        # dict and string forms of one document hash the same
        assert tg.query_hash(json.loads(query_text)) == tg.query_hash(query_text) == report["query_hash"]

        same = tg.compare(report, report)
        assert all(row["delta_pp"] == 0 for row in same["rows"])


def test_network_and_validation():
    net = tg.Network("corridor")
    assert net.n_segments > 0 and net.n_nodes > 1
    assert net.to_geojson()["type"] == "FeatureCollection"
    gate = net.gate_across("c12", "S1")
    assert gate["gate_id"] == "S1" and len(gate["line"]) == 2

    spec = {
        "network": "corridor",
        "start_date": "2023-01-02",
        "days": 21,
        "od_pairs": [{"origin": "c0", "destination": "c3", "trips_per_day": 300}],
        "weekend_multiplier": 0.3,
        "penetration": 0.3,
        "waypoint_period_s": 60,
        "stations": [{"station_id": "S1", "segment_id": "c12"}],
        "seed": 4,
    }
    with tempfile.TemporaryDirectory() as d:
        d = Path(d)
        n_trips, n_counts = tg.generate(spec, d)
        assert n_trips > 0 and n_counts > 0
        corpus = tg.Corpus("corridor", d / "trips.csv", counts=d / "counts.csv")
        v = corpus.validate("S1", gate)
        assert len(v["weekly"]["points"]) == 3
        assert v["summary"]["median"] > 0.75


def test_errors():
    try:
        tg.query_hash('{"gates": [], "gate_sequence": [{"gate_id": "x", "sign": 1}]}')
    except tg.TripgateError as e:
        assert "x" in str(e)
    else:
        raise AssertionError("unknown gate accepted")
    try:
        tg.Corpus("corridor", "/nonexistent/trips.csv")
    except OSError:
        pass
    else:
        raise AssertionError("missing trips file accepted")


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"ok {name}")
    print(f"tripgate {tg.__version__}: smoke test passed")
