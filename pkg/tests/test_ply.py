"""PLY reading and writing."""

from __future__ import annotations

import numpy as np
import pytest

from cloudchange import ParseError, PointCloud, UnsupportedPropertyWarning
from cloudchange.ply import read_ply, write_ply


def _random_cloud(rng, n=1000, color=False):
    # Positions quantized to float32 so the on-disk encoding is lossless.
    pts = rng.uniform(-50, 50, size=(n, 3)).astype(np.float32).astype(np.float64)
    conf = rng.uniform(0, 1, n).astype(np.float32).astype(np.float64)
    col = rng.integers(0, 256, (n, 3), dtype=np.uint8) if color else None
    return PointCloud(pts, conf, color=col)


class TestRoundTrip:
    @pytest.mark.parametrize("binary", [True, False], ids=["binary", "ascii"])
    def test_positions_and_confidence_identical(self, rng, tmp_path, binary):
        cloud = _random_cloud(rng)
        path = tmp_path / "cloud.ply"
        write_ply(cloud, path, binary=binary)
        back = read_ply(path)
        np.testing.assert_array_equal(back.points, cloud.points)
        np.testing.assert_array_equal(back.confidence, cloud.confidence)

    @pytest.mark.parametrize("binary", [True, False], ids=["binary", "ascii"])
    def test_colors_round_trip(self, rng, tmp_path, binary):
        cloud = _random_cloud(rng, color=True)
        path = tmp_path / "cloud.ply"
        write_ply(cloud, path, binary=binary)
        back = read_ply(path)
        np.testing.assert_array_equal(back.color, cloud.color)

    def test_write_is_byte_deterministic(self, rng, tmp_path):
        cloud = _random_cloud(rng, color=True)
        a, b = tmp_path / "a.ply", tmp_path / "b.ply"
        write_ply(cloud, a)
        write_ply(cloud, b)
        assert a.read_bytes() == b.read_bytes()

    def test_empty_cloud_round_trip(self, tmp_path):
        cloud = PointCloud(np.zeros((0, 3)))
        path = tmp_path / "empty.ply"
        write_ply(cloud, path)
        assert len(read_ply(path)) == 0

    def test_ascii_binary_agree(self, rng, tmp_path):
        cloud = _random_cloud(rng, n=200)
        pa, pb = tmp_path / "a.ply", tmp_path / "b.ply"
        write_ply(cloud, pa, binary=False)
        write_ply(cloud, pb, binary=True)
        np.testing.assert_array_equal(read_ply(pa).points, read_ply(pb).points)


class TestReadForeignFiles:
    def test_missing_confidence_defaults_to_one(self, tmp_path):
        path = tmp_path / "plain.ply"
        path.write_text(
            "ply\nformat ascii 1.0\nelement vertex 2\n"
            "property float x\nproperty float y\nproperty float z\n"
            "end_header\n0 0 0\n1 2 3\n"
        )
        cloud = read_ply(path)
        assert (cloud.confidence == 1.0).all()
        np.testing.assert_array_equal(cloud.points[1], [1.0, 2.0, 3.0])

    def test_unknown_property_skipped_with_warning(self, tmp_path):
        path = tmp_path / "extra.ply"
        path.write_text(
            "ply\nformat ascii 1.0\nelement vertex 1\n"
            "property float x\nproperty float y\nproperty float z\n"
            "property float curvature\n"
            "end_header\n1 2 3 0.5\n"
        )
        with pytest.warns(UnsupportedPropertyWarning):
            cloud = read_ply(path)
        np.testing.assert_array_equal(cloud.points[0], [1.0, 2.0, 3.0])

    def test_double_precision_properties_accepted(self, tmp_path):
        path = tmp_path / "dbl.ply"
        path.write_text(
            "ply\nformat ascii 1.0\nelement vertex 1\n"
            "property double x\nproperty double y\nproperty double z\n"
            "end_header\n0.25 0.5 0.75\n"
        )
        cloud = read_ply(path)
        np.testing.assert_array_equal(cloud.points[0], [0.25, 0.5, 0.75])

    def test_comments_ignored(self, tmp_path):
        path = tmp_path / "comments.ply"
        path.write_text(
            "ply\ncomment made elsewhere\nformat ascii 1.0\nelement vertex 1\n"
            "property float x\nproperty float y\nproperty float z\n"
            "end_header\n4 5 6\n"
        )
        np.testing.assert_array_equal(read_ply(path).points[0], [4.0, 5.0, 6.0])

    def test_trailing_face_element_ignored(self, tmp_path):
        path = tmp_path / "faces.ply"
        path.write_text(
            "ply\nformat ascii 1.0\nelement vertex 3\n"
            "property float x\nproperty float y\nproperty float z\n"
            "element face 1\nproperty list uchar int vertex_indices\n"
            "end_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"
        )
        assert len(read_ply(path)) == 3


class TestParseErrors:
    def test_truncated_binary_names_offset(self, rng, tmp_path):
        cloud = _random_cloud(rng, n=100)
        path = tmp_path / "trunc.ply"
        write_ply(cloud, path, binary=True)
        data = path.read_bytes()
        path.write_bytes(data[: len(data) - 37])
        with pytest.raises(ParseError) as info:
            read_ply(path)
        assert info.value.offset is not None

    def test_truncated_ascii_names_line(self, tmp_path):
        path = tmp_path / "short.ply"
        path.write_text(
            "ply\nformat ascii 1.0\nelement vertex 3\n"
            "property float x\nproperty float y\nproperty float z\n"
            "end_header\n0 0 0\n1 1 1\n"
        )
        with pytest.raises(ParseError):
            read_ply(path)

    def test_missing_end_header(self, tmp_path):
        path = tmp_path / "noend.ply"
        path.write_text("ply\nformat ascii 1.0\nelement vertex 1\n")
        with pytest.raises(ParseError):
            read_ply(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "notply.ply"
        path.write_text("obj\nformat ascii 1.0\nend_header\n")
        with pytest.raises(ParseError):
            read_ply(path)

    def test_big_endian_rejected(self, tmp_path):
        path = tmp_path / "be.ply"
        path.write_text(
            "ply\nformat binary_big_endian 1.0\nelement vertex 0\n"
            "property float x\nproperty float y\nproperty float z\nend_header\n"
        )
        with pytest.raises(ParseError):
            read_ply(path)

    def test_list_property_on_vertices_rejected(self, tmp_path):
        path = tmp_path / "lists.ply"
        path.write_text(
            "ply\nformat ascii 1.0\nelement vertex 1\n"
            "property float x\nproperty float y\nproperty float z\n"
            "property list uchar int neighbors\n"
            "end_header\n0 0 0 0\n"
        )
        with pytest.raises(ParseError):
            with pytest.warns(UnsupportedPropertyWarning):
                read_ply(path)

    def test_confidence_out_of_range_rejected(self, tmp_path):
        path = tmp_path / "badconf.ply"
        path.write_text(
            "ply\nformat ascii 1.0\nelement vertex 1\n"
            "property float x\nproperty float y\nproperty float z\n"
            "property float confidence\n"
            "end_header\n0 0 0 1.5\n"
        )
        with pytest.raises(ParseError):
            read_ply(path)

    def test_non_numeric_vertex_value(self, tmp_path):
        path = tmp_path / "nan.ply"
        path.write_text(
            "ply\nformat ascii 1.0\nelement vertex 1\n"
            "property float x\nproperty float y\nproperty float z\n"
            "end_header\nfoo 0 0\n"
        )
        with pytest.raises(ParseError) as info:
            read_ply(path)
        assert info.value.line is not None
