import hashlib
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magkit import datasets
from magkit.errors import ChecksumError, InputError, OfflineError
from magkit.io import fmt, read_table, write_csv, write_json


def test_read_header_and_label(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("a,label,b\n1,0,2\n3,1,4\n")
    x, y, h = read_table(p, "label")
    assert x.tolist() == [[1, 2], [3, 4]] and y.tolist() == [0, 1] and h == ["a", "b"]
    x, y, h = read_table(p, 1)
    assert y.dtype.kind == "i"


def test_read_headerless(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("1.5,2\n\n-3e2,4\n")
    x, y, h = read_table(p)
    assert x.tolist() == [[1.5, 2], [-300, 4]] and y is None and h is None


@pytest.mark.parametrize("text", ["", "a,b\n", "1,2\n3\n", "1,x\n", "1,nan\n"])
def test_read_errors(tmp_path, text):
    p = tmp_path / "a.csv"
    p.write_text(text)
    with pytest.raises(InputError):
        read_table(p)


def test_missing_label_column(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(InputError):
        read_table(p, "y")


@settings(max_examples=200)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trip(x):
    s = fmt(x)
    assert float(s) == x
    assert len(s.replace("-", "").split("e")[0].replace(".", "").lstrip("0")) <= 17


def test_write_csv_atomic_replace(tmp_path):
    p = tmp_path / "out" / "w.csv"
    write_csv(p, ["i", "v"], [(0, 0.1), (1, math.nan)])
    assert p.read_text() == "i,v\n0,0.10000000000000001\n1,nan\n"
    write_csv(p, ["i"], [(2,)])
    assert p.read_text() == "i\n2\n"
    assert [f.name for f in p.parent.iterdir()] == ["w.csv"]


def test_write_json(tmp_path):
    p = tmp_path / "r.json"
    write_json(p, {"b": np.float64(0.1), "a": [np.inf, np.int64(3)], "c": np.array([True])})
    data = json.loads(p.read_text())
    assert data == {"schema": 1, "a": [None, 3], "b": 0.1, "c": [True]}
    assert list(data) == ["a", "b", "c", "schema"]


class FakeNet:
    def __init__(self, blob):
        self.blob = blob
        self.calls = 0

    def __call__(self, url):
        self.calls += 1
        return self.blob


def digest(blob):
    return hashlib.sha256(blob).hexdigest()


def test_fetch_downloads_and_caches(tmp_path):
    blob = b"payload"
    net = FakeNet(blob)
    p = datasets.fetch_dataset("breastw", tmp_path, True, digest(blob), downloader=net)
    assert p.read_bytes() == blob and net.calls == 1
    assert datasets.fetch_dataset("breastw", tmp_path, True, digest(blob), downloader=net) == p
    assert net.calls == 1
    # cached and valid: no network even when not allowed
    assert datasets.fetch_dataset("breastw", tmp_path, False, digest(blob), downloader=net) == p


def test_fetch_corrupted_cache(tmp_path):
    blob = b"payload"
    (tmp_path / "breastw.npz").write_bytes(b"garbage")
    net = FakeNet(blob)
    p = datasets.fetch_dataset("breastw", tmp_path, True, digest(blob), downloader=net)
    assert net.calls == 1 and p.read_bytes() == blob


def test_fetch_checksum_mismatch(tmp_path):
    net = FakeNet(b"tampered")
    with pytest.raises(ChecksumError):
        datasets.fetch_dataset("breastw", tmp_path, True, digest(b"payload"), downloader=net)
    assert not any(tmp_path.iterdir())


def test_fetch_guards(tmp_path):
    with pytest.raises(InputError, match="breastw"):
        datasets.fetch_dataset("nope", tmp_path)
    with pytest.raises(ChecksumError):
        datasets.fetch_dataset("breastw", tmp_path, True)
    with pytest.raises(OfflineError):
        datasets.fetch_dataset("breastw", tmp_path, False, "0" * 64)
    with pytest.raises(InputError):
        datasets.fetch_dataset("breastw", tmp_path, True, "0" * 64, url="http://example.org/x")


def test_fetch_network_failure(tmp_path):
    def down(url):
        raise OSError("unreachable")

    with pytest.raises(OfflineError, match="manually"):
        datasets.fetch_dataset("breastw", tmp_path, True, "0" * 64, downloader=down)


def test_load_labeled(tmp_path):
    x = np.arange(6.0).reshape(3, 2)
    np.savez(tmp_path / "d.npz", X=x, y=np.array([[0], [1], [0]]))
    gx, gy = datasets.load_labeled(tmp_path / "d.npz")
    assert gx.tolist() == x.tolist() and gy.tolist() == [0, 1, 0]
    from scipy.io import savemat
    savemat(tmp_path / "d.mat", {"X": x, "y": np.array([[1], [0], [0]])})
    assert datasets.load_labeled(tmp_path / "d.mat")[1].tolist() == [1, 0, 0]
    (tmp_path / "d.csv").write_text("a,b,y\n0,1,0\n2,3,1\n")
    assert datasets.load_labeled(tmp_path / "d.csv")[1].tolist() == [0, 1]
