import numpy as np

from flatnormals.core import NormalMap
from flatnormals.evaluation import AngleErrors
from flatnormals.mixing import MixSpec, build_mix_plan
from flatnormals.plotting import plot_error_report, plot_mix_plan, plot_normal_panel

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def test_figures_written_and_deterministic(tmp_path, rng):
    e = AngleErrors(rng.uniform(0, 40, (20, 30)), rng.random((20, 30)) > 0.1)
    for k in (1, 2):
        plot_error_report([e, e], tmp_path / f"r{k}.png", title="errors", labels=["a", "b"])
    assert (tmp_path / "r1.png").read_bytes()[:8] == PNG_MAGIC
    assert (tmp_path / "r1.png").read_bytes() == (tmp_path / "r2.png").read_bytes()

    v = rng.normal(size=(20, 30, 3))
    nm = NormalMap(v / np.linalg.norm(v, axis=-1, keepdims=True), np.ones((20, 30), bool))
    plot_normal_panel(nm, nm, tmp_path / "p.png", e)
    plan = build_mix_plan(MixSpec((("a", 3), ("b", 1)), batch_size=8), 4, {"a": 10, "b": 10})
    plot_mix_plan(plan, tmp_path / "m.png")
    for name in ("p.png", "m.png"):
        assert (tmp_path / name).read_bytes()[:8] == PNG_MAGIC
