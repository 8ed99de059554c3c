import math

import numpy as np
import pytest

from uav_moddpg import harness
from uav_moddpg.config import desk_config, load_config
from uav_moddpg.ddpg import PRESETS, Trainer, WeightVector, make_actor
from uav_moddpg.env import UavEnv
from uav_moddpg.nn import save_mlp

TINY = dict(episodes=4, mission_secs=20.0, actor_hidden=(8,), critic_hidden=(8,),
            replay_capacity=30, batch_size=8, checkpoint_every=2)


def tiny(**kw):
    return desk_config(**{**TINY, **kw})


def zero_speed_checkpoint(path, cfg):
    actor = make_actor(cfg.hyper.actor_hidden, np.random.default_rng(0))
    for p in actor.params():
        p[...] = 0.0
    actor.layers[-1].bias[0] = -1000.0
    save_mlp(actor, path)
    return path


def test_train_writes_log_checkpoints_and_manifest(tmp_path):
    cfg = tiny(episodes=10, checkpoint_every=4)
    trainer = harness.train_run(cfg, tmp_path)
    rows = harness.read_csv(tmp_path / harness.TRAIN_LOG)
    assert len(rows) == 10 and [int(r["episode"]) for r in rows] == list(range(1, 11))
    assert trainer.updates > 0
    for ep in (4, 8, 10):
        actor, critic = harness.checkpoint_paths(tmp_path, ep)
        assert actor.exists() and critic.exists()
    assert load_config(tmp_path / harness.MANIFEST) == cfg


def test_rerun_is_byte_identical(tmp_path):
    cfg = tiny()
    for d in ("a", "b"):
        harness.train_run(cfg, tmp_path / d)
    for name in (harness.TRAIN_LOG, harness.MANIFEST, "checkpoints/actor_ep00004.txt",
                 "checkpoints/critic_ep00002.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_resume_matches_uninterrupted_run(tmp_path, monkeypatch):
    cfg = tiny(episodes=5, checkpoint_every=2)
    harness.train_run(cfg, tmp_path / "full")

    real = Trainer.run_episode

    def crash_after_three(self):
        if self.episode == 3:
            raise KeyboardInterrupt
        return real(self)

    monkeypatch.setattr(Trainer, "run_episode", crash_after_three)
    with pytest.raises(KeyboardInterrupt):
        harness.train_run(cfg, tmp_path / "cut")
    monkeypatch.setattr(Trainer, "run_episode", real)
    assert len(harness.read_csv(tmp_path / "cut" / harness.TRAIN_LOG)) == 3
    trainer = harness.train_run(cfg, tmp_path / "cut", resume=True)
    assert [r.episode for r in trainer.log] == [1, 2, 3, 4, 5]
    full = (tmp_path / "full" / harness.TRAIN_LOG).read_bytes()
    assert (tmp_path / "cut" / harness.TRAIN_LOG).read_bytes() == full


def test_resume_can_extend_but_not_change_config(tmp_path):
    harness.train_run(tiny(episodes=2), tmp_path)
    trainer = harness.train_run(tiny(episodes=3), tmp_path, resume=True)
    assert trainer.episode == 3
    with pytest.raises(ValueError, match="different configuration"):
        harness.train_run(tiny(episodes=4, lr_actor=0.01), tmp_path, resume=True)


def test_eval_zero_speed_checkpoint(tmp_path):
    cfg = tiny(seed=1)
    ck = zero_speed_checkpoint(tmp_path / "zero.txt", cfg)
    report = harness.eval_run(ck, cfg, 6, tmp_path / "eval.csv")
    rows = harness.read_csv(tmp_path / "eval.csv")
    per_ep, mean, std = rows[:-2], rows[-2], rows[-1]
    assert len(per_ep) == 6 and mean["episode"] == "mean" and std["episode"] == "std"
    for col in ("avg_rate_mbps", "avg_power_w", "harvested_uJ", "hovers"):
        assert float(mean[col]) == pytest.approx(np.mean([float(r[col]) for r in per_ep]), rel=1e-12)
        assert float(std[col]) == pytest.approx(np.std([float(r[col]) for r in per_ep]), abs=1e-12)
    idle = [r for r in report.rows if r.hovers == 0]
    assert idle and all(r.avg_power_w == pytest.approx(168.49, abs=1e-9) for r in idle)


def test_eval_errors(tmp_path):
    cfg = tiny()
    ck = zero_speed_checkpoint(tmp_path / "zero.txt", cfg)
    with pytest.raises(ValueError, match="at least one"):
        harness.eval_run(ck, cfg, 0, tmp_path / "e.csv")
    with pytest.raises(ValueError, match="6-8-2 does not match configured actor 6-16-2"):
        harness.eval_run(ck, tiny(actor_hidden=(16,)), 1, tmp_path / "e.csv")


def test_curves(tmp_path):
    paths = harness.write_curves(desk_config(), tmp_path)
    assert [p.name for p in paths] == list(harness.CURVE_FILES)
    prop = harness.read_csv(paths[0])
    assert len(prop) == 201 and prop[0]["speed_mps"] == "0.0" and prop[-1]["speed_mps"] == "20.0"
    assert float(prop[0]["power_w"]) == pytest.approx(168.49, abs=1e-9)
    eh = [float(r["harvested_uw"]) for r in harness.read_csv(paths[1])]
    assert eh[0] == 0.0 and np.all(np.diff(eh) >= 0)
    assert 0.97 * 9.079 < eh[-1] < 9.079
    los = [float(r["p_los"]) for r in harness.read_csv(paths[2])]
    assert np.all(np.diff(los) >= 0) and len(los) == 900


def test_golden_headers(tmp_path):
    harness.write_curves(desk_config(), tmp_path)
    heads = {name: (tmp_path / name).read_text().splitlines()[0] for name in harness.CURVE_FILES}
    assert heads == {"propulsion_power.csv": "speed_mps,power_w",
                     "harvested_power.csv": "received_uw,harvested_uw",
                     "los_probability.csv": "elevation_deg,p_los"}
    harness.train_run(tiny(episodes=1), tmp_path / "run")
    assert (tmp_path / "run" / harness.TRAIN_LOG).read_text().splitlines()[0] == \
        "episode,return,r_sum_mbit,e_harvest_uJ,e_consume_J,critic_loss,actor_obj,epsilon"
    cfg = tiny()
    harness.eval_run(zero_speed_checkpoint(tmp_path / "z.txt", cfg), cfg, 1, tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text().splitlines()[0] == \
        "episode,avg_rate_mbps,avg_power_w,harvested_uJ,hovers"
    assert harness.SWEEP_COLUMNS == ("preset", "w_dc", "w_eh", "w_ec", "seed", "avg_rate_mbps",
                                     "avg_power_w", "harvested_uJ", "hovers", "status")
    assert ",".join(harness.SWEEP_COLUMNS) == "preset,w_dc,w_eh,w_ec,seed,avg_rate_mbps," \
        "avg_power_w,harvested_uJ,hovers,status"


def test_trace_csv(tmp_path):
    env = UavEnv(tiny().env, record_trace=True)
    env.reset(0)
    for _ in range(3):
        env.step([1.0, 0.0])
    rows = harness.read_csv(harness.write_trace_csv(tmp_path / "trace.csv", env.trace))
    assert len(rows) == 3 and rows[0]["event"] in ("fly", "hover")


def test_sweep_two_presets(tmp_path):
    rows = harness.sweep(tiny(episodes=2), harness.preset_grid(["sodr", "soec"]), [1],
                         tmp_path, eval_episodes=2)
    table = harness.read_csv(tmp_path / "comparison.csv")
    assert len(rows) == len(table) == 2
    assert [r["preset"] for r in table] == ["sodr", "soec"]
    assert (float(table[0]["w_dc"]), float(table[0]["w_ec"])) == (100.0, 1.0)
    assert (float(table[1]["w_dc"]), float(table[1]["w_ec"])) == (1.0, 100.0)
    assert all(r.status == "ok" for r in rows)


def test_sweep_serial_equals_parallel(tmp_path):
    cfg, grid = tiny(episodes=2), harness.preset_grid(["sodr", "soec"])
    harness.sweep(cfg, grid, [1, 2], tmp_path / "serial", eval_episodes=1, workers=1)
    harness.sweep(cfg, grid, [1, 2], tmp_path / "parallel", eval_episodes=1, workers=2)
    a = (tmp_path / "serial" / "comparison.csv").read_bytes()
    assert a == (tmp_path / "parallel" / "comparison.csv").read_bytes()
    assert (tmp_path / "serial" / "soec_seed2" / harness.TRAIN_LOG).read_bytes() == \
        (tmp_path / "parallel" / "soec_seed2" / harness.TRAIN_LOG).read_bytes()


def test_sweep_records_failures(tmp_path, monkeypatch):
    real = harness.train_run

    def flaky(cfg, out_dir, resume=False):
        if cfg.weights.w_ec == 100.0:
            raise FloatingPointError("critic loss is not finite (nan)")
        return real(cfg, out_dir, resume)

    monkeypatch.setattr(harness, "train_run", flaky)
    rows = harness.sweep(tiny(episodes=1), harness.preset_grid(["sodr", "soec"]), [1], tmp_path,
                         eval_episodes=1)
    assert rows[0].status == "ok"
    assert rows[1].status.startswith("failed: FloatingPointError") and math.isnan(rows[1].avg_power_w)
    assert len(harness.read_csv(tmp_path / "comparison.csv")) == 2


def test_sweep_rejects_empty_grid_and_unknown_preset(tmp_path):
    with pytest.raises(ValueError):
        harness.sweep(tiny(), {}, [1], tmp_path)
    with pytest.raises(ValueError, match="unknown preset"):
        harness.preset_grid(["pareto"])
    assert harness.preset_grid(["SODR"]) == {"sodr": PRESETS["sodr"]}
    assert isinstance(PRESETS["soec"], WeightVector)


def test_gradcheck_suite():
    errors = harness.gradcheck_suite(20, seed=0)
    assert len(errors) == 20 and max(errors) < 1e-4
