import numpy as np

from svprolif.experiments import Cell, SweepConfig, proliferation_sweep
from svprolif.plotting import (
    plot_buhot,
    plot_converse,
    plot_figure1,
    plot_sweep,
    write_gnuplot_figure1,
)

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def is_png(path):
    return path.read_bytes()[:8] == PNG_MAGIC


def test_plot_sweep(tmp_path):
    cells = (Cell(5, {"kind": "isotropic", "d": 5}), Cell(5, {"kind": "isotropic", "d": 40}))
    res = proliferation_sweep(SweepConfig(cells, trials=5, seed=1))
    assert is_png(plot_sweep(res, tmp_path / "s.png"))


def test_plot_tables(tmp_path):
    conv = [{"n": 10, "d": 10, "q_hat": 0.8, "ci_halfwidth": 0.05, "thm3_bound": 0.2}]
    assert is_png(plot_converse(conv, tmp_path / "c.png"))
    buhot = [{"delta": 0.1, "sv_fraction_mean": 0.99}, {"delta": 2.0, "sv_fraction_mean": 0.45}]
    assert is_png(plot_buhot(buhot, tmp_path / "b.png"))


def test_plot_figure1_and_gnuplot(tmp_path):
    t = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    curve = {"t": t, "svm": np.sin(t), "interp": np.sin(t), "t_train": t[:4],
             "y_train": np.array([1, -1, 1, -1]), "sv_mask": np.array([True] * 4)}
    assert is_png(plot_figure1({1.0: curve, 3.0: curve}, tmp_path / "f.png"))
    gp = write_gnuplot_figure1({1.0: "c1.csv", 3.0: "c3.csv"}, {1.0: "t1.csv", 3.0: "t3.csv"},
                               tmp_path / "f.gp")
    text = gp.read_text()
    assert "set datafile separator ','" in text
    assert text.count("plot '") == 2 and "c3.csv" in text and "t1.csv" in text
