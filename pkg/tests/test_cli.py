import json
import os

from fvsupra.cli import main


def test_mesh_gen_ti_tri_counts(tmp_path, capsys):
    out = tmp_path / "m.json"
    rc = main(["mesh", "gen", "--ti-tri", "--h", "1/20", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert len(doc["elements"]) == 800  # 2 * 20 * 20 with the square family


def test_mesh_gen_1d_pattern(tmp_path):
    out = tmp_path / "m.json"
    rc = main(["mesh", "gen", "--1d", "--steps", "0.1,0.3,0.6",
               "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert len(doc["nodes"]) == 3


def test_mesh_inspect_round_trip(tmp_path, capsys):
    out = tmp_path / "m.json"
    main(["mesh", "gen", "--ti-tri", "--h", "1/8", "--perturb", "1/10",
          "--seed", "3", "--out", str(out)])
    before = out.read_bytes()
    rc = main(["mesh", "export", str(out), "--out", str(out)])
    assert rc == 0
    assert out.read_bytes() == before
    capsys.readouterr()
    rc = main(["mesh", "inspect", str(out)])
    assert rc == 0
    info = json.loads(capsys.readouterr().out)
    assert info["elements"] == 128


def test_mesh_inspect_rejects_invalid(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "dimension": 2, "period": [1, 1],
        "nodes": [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]],
        "elements": [[[0, 0, 0], [1, 0, 0], [2, 0, 0]]],
    }))
    rc = main(["mesh", "inspect", str(bad)])
    assert rc == 1


def write_cfg(tmp_path, doc):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(doc))
    return str(p)


def test_analyze_pass_and_fail_exit_codes(tmp_path, capsys):
    good = write_cfg(tmp_path, {
        "mesh": {"kind": "ti-tri", "n": 4,
                 "perturb": {"amplitude": "1/6", "seed": 3}},
        "system": {"name": "transport", "omega": ["1", "2"]},
        "scheme": {"name": "eb-upwind"},
        "analysis": {"p_max": 2, "stability_times": [0.2]},
        "output": {"prefix": "ok"},
    })
    rc = main(["analyze", "--config", good, "--out", str(tmp_path)])
    assert rc == 0
    doc = json.loads((tmp_path / "ok_diagnostics.json").read_text())
    assert doc["p_measured"] == 1 and doc["zero_mean"]["verdict"]

    bad = write_cfg(tmp_path, {
        "mesh": {"kind": "checkerboard", "h": "1/4", "replicate": 4},
        "system": {"name": "transport", "omega": ["1"]},
        "scheme": {"name": "eb-central"},
        "analysis": {"p_max": 2, "stability_times": [0.2]},
        "output": {"prefix": "cb"},
    })
    rc = main(["analyze", "--config", bad, "--out", str(tmp_path)])
    assert rc == 1  # kernel check fails on the checkerboard
    doc = json.loads((tmp_path / "cb_diagnostics.json").read_text())
    assert not doc["kernel"]["holds"]


def test_converge_deterministic_outputs(tmp_path):
    cfg = write_cfg(tmp_path, {
        "mesh": {"kind": "1d", "steps": ["3/10", "2/10", "4/10", "1/10"]},
        "system": {"name": "transport", "omega": ["1"]},
        "scheme": {"name": "basic"},
        "case": {"kind": "sine-1d", "T": 0.25},
        "levels": [1, 2, 4],
        "output": {"prefix": "t"},
    })
    rc = main(["converge", "--config", cfg, "--out", str(tmp_path / "a")])
    assert rc == 0
    rc = main(["converge", "--config", cfg, "--out", str(tmp_path / "b")])
    assert rc == 0
    fa = (tmp_path / "a" / "t_basic.csv").read_bytes()
    fb = (tmp_path / "b" / "t_basic.csv").read_bytes()
    assert fa == fb
    assert fa.splitlines()[0] == b"level,h,ndof,error,order"


def test_converge_schema_rejects_bad_config(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"mesh": {"kind": "weird"}})
    rc = main(["converge", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 2


def test_constants_subcommand(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {
        "mesh": {"kind": "1d", "steps": ["1/4", "1/4", "1/4", "1/4"]},
        "system": {"name": "transport", "omega": ["1"]},
        "scheme": {"name": "basic"},
    })
    rc = main(["constants", "--config", cfg])
    assert rc == 0
    out = capsys.readouterr().out
    assert "C_v" in out and "C_A" in out


def test_bundled_configs_exist_and_validate():
    import fvsupra
    from fvsupra.cli import load_config
    base = os.path.join(os.path.dirname(fvsupra.__file__), "configs")
    names = ["vortex_steady.json", "vortex_advected.json",
             "fc1d_vs_modified.json", "appendixA.json", "checkerboard.json"]
    for name in names:
        cfg = load_config(os.path.join(base, name))
        assert "mesh" in cfg


def test_bundled_cheap_configs_end_to_end(tmp_path):
    import fvsupra
    base = os.path.join(os.path.dirname(fvsupra.__file__), "configs")
    # fc1d contrast: third vs second order
    rc = main(["converge", "--config", os.path.join(base, "fc1d_vs_modified.json"),
               "--out", str(tmp_path)])
    assert rc == 0
    res = json.loads((tmp_path / "fc1d_results.json").read_text())
    xg = [r["order"] for r in res["fc-xg"] if r["order"] is not None]
    mod = [r["order"] for r in res["fc-xg-mod"] if r["order"] is not None]
    assert xg[-1] >= 2.8 and mod[-1] <= 2.3
    # appendix A: first order with the explicit bound satisfied
    rc = main(["converge", "--config", os.path.join(base, "appendixA.json"),
               "--out", str(tmp_path)])
    assert rc == 0
    rows = (tmp_path / "appendixA_appendix-a.csv").read_text().splitlines()
    assert rows[0] == "level,h,error,order,bound_ok"
    assert all(r.endswith("True") for r in rows[1:])
    # checkerboard: stalled convergence
    rc = main(["converge", "--config", os.path.join(base, "checkerboard.json"),
               "--out", str(tmp_path)])
    assert rc == 0
    res = json.loads((tmp_path / "checkerboard_results.json").read_text())
    orders = [r["order"] for r in res["eb-central"] if r["order"] is not None]
    assert orders[-1] <= 1.5
