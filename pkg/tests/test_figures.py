"""Headless figure rendering: files appear and bytes are reproducible."""

import pytest

from riskcert.errors import InvalidInputError
from riskcert.figures import save_bar_figure, save_line_figure

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


class TestLineFigure:
    def test_writes_png(self, tmp_path):
        out = save_line_figure(
            tmp_path / "curve.png",
            [1.0, 2.0, 3.0],
            {"cost": [0.5, 0.2, 0.1]},
            xlabel="x",
            ylabel="y",
            title="decay",
        )
        data = (tmp_path / "curve.png").read_bytes()
        assert out == str(tmp_path / "curve.png")
        assert data.startswith(PNG_MAGIC)
        assert len(data) > 1000

    def test_deterministic_bytes(self, tmp_path):
        for name in ("a.png", "b.png"):
            save_line_figure(
                tmp_path / name,
                [1.0, 2.0, 4.0],
                {"u": [1.0, 0.5, 0.25], "v": [2.0, 1.0, 0.5]},
                xlabel="t",
                ylabel="value",
                title="two series",
                logx=True,
                logy=True,
            )
        assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()

    def test_rejects_empty_series(self, tmp_path):
        with pytest.raises(InvalidInputError):
            save_line_figure(tmp_path / "x.png", [1.0], {}, "x", "y", "t")

    def test_rejects_length_mismatch(self, tmp_path):
        with pytest.raises(InvalidInputError, match="points"):
            save_line_figure(
                tmp_path / "x.png", [1.0, 2.0], {"s": [1.0]}, "x", "y", "t"
            )


class TestBarFigure:
    def test_writes_png(self, tmp_path):
        save_bar_figure(
            tmp_path / "bars.png",
            ["check_a", "check_b"],
            [0.4, 0.9],
            [1.0, 1.0],
            title="margins",
        )
        assert (tmp_path / "bars.png").read_bytes().startswith(PNG_MAGIC)

    def test_deterministic_bytes(self, tmp_path):
        for name in ("a.png", "b.png"):
            save_bar_figure(
                tmp_path / name, ["one"], [0.5], [1.0], title="single"
            )
        assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()

    def test_rejects_empty(self, tmp_path):
        with pytest.raises(InvalidInputError):
            save_bar_figure(tmp_path / "x.png", [], [], [], title="t")

    def test_rejects_misaligned(self, tmp_path):
        with pytest.raises(InvalidInputError, match="align"):
            save_bar_figure(tmp_path / "x.png", ["a"], [0.1, 0.2], [1.0], title="t")
