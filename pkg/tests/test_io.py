import json

import numpy as np
import pytest
import scipy.io

from weakreg import io
from weakreg.io import FormatError


def test_edge_list_comments_and_size(tmp_path):
    f = tmp_path / "g.tsv"
    f.write_text("# header\n0\t1\n1 2  % trailing\n\n")
    g = io.read_graph(str(f))
    assert g.n == 3 and g.adjacency[0, 1] == 1 and g.adjacency[2, 1] == 1
    assert io.read_graph(str(f), 5).n == 5
    with pytest.raises(FormatError):
        io.read_graph(str(f), 2)


@pytest.mark.parametrize("text", ["0\tx\n", "-1\t2\n", "3\n", ""])
def test_edge_list_errors(tmp_path, text):
    f = tmp_path / "g.tsv"
    f.write_text(text)
    with pytest.raises(FormatError):
        io.read_graph(str(f))


def test_self_loops_dropped(tmp_path):
    f = tmp_path / "g.tsv"
    f.write_text("1\t1\n0\t1\n1\t0\n")
    g = io.read_graph(str(f))
    assert g.adjacency.sum() == 2 and g.adjacency[1, 1] == 0


def test_matrix_market_kernel(tmp_path):
    m = np.arange(6, dtype=float).reshape(2, 3)
    scipy.io.mmwrite(tmp_path / "k.mtx", m)
    k = io.read_kernel(str(tmp_path / "k.mtx"))
    assert np.array_equal(k.values, m) and k.scale == pytest.approx(1 / 6)


def test_json_kernel_with_scale(tmp_path):
    (tmp_path / "k.json").write_text(json.dumps({"values": [[1, 2], [3, 4]], "scale": 1.0}))
    assert io.read_kernel(str(tmp_path / "k.json")).scale == 1.0


def test_bad_matrix_market(tmp_path):
    (tmp_path / "k.mtx").write_text("not a matrix\n")
    with pytest.raises(FormatError):
        io.read_kernel(str(tmp_path / "k.mtx"))


def test_dumps_is_canonical():
    a = io.dumps({"b": np.float64(0.1), "a": [np.int64(1), (2, 3)], "c": np.bool_(True)})
    assert a == io.dumps(json.loads(a))
    assert a.index('"a"') < a.index('"b"')
    with pytest.raises(ValueError):
        io.dumps({"x": float("nan")})


def test_malformed_poly(tmp_path):
    (tmp_path / "p.json").write_text(json.dumps({"degree": 2}))
    with pytest.raises(FormatError):
        io.read_poly(str(tmp_path / "p.json"))
