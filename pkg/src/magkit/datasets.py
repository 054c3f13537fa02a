"""Opt-in download of outlier-detection benchmark files with checksum pinning."""

from __future__ import annotations

import hashlib
import os
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ChecksumError, InputError, OfflineError
from .io import read_table


@dataclass(frozen=True)
class DatasetEntry:
    url: str
    filename: str
    sha256: str | None = None


# sha256 is None where no digest has been pinned yet; callers must then pass one.
REGISTRY = {
    "breastw": DatasetEntry(
        url="https://github.com/Minqi824/ADBench/raw/main/adbench/datasets/Classical/4_breastw.npz",
        filename="breastw.npz",
    ),
}


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _download(url: str, timeout: float = 60.0) -> bytes:
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        return resp.read()


def fetch_dataset(name: str, directory, allow_network: bool = False, sha256: str | None = None,
                  url: str | None = None, downloader=None) -> Path:
    """Return the local path of a verified benchmark file, downloading it if needed.

    A cached file whose digest matches is returned without touching the
    network.  A mismatching cache is deleted and fetched again.  Nothing is
    downloaded unless ``allow_network`` is set.
    """
    if name not in REGISTRY:
        raise InputError(f"unknown dataset {name!r}; supported: {', '.join(sorted(REGISTRY))}")
    entry = REGISTRY[name]
    pin = (sha256 or entry.sha256 or "").lower() or None
    if pin is None:
        raise ChecksumError(f"no pinned SHA-256 for {name!r}; pass --sha256 <digest> to pin one")
    url = url or entry.url
    if not url.startswith("https://"):
        raise InputError(f"refusing non-HTTPS url {url!r}")

    dest = Path(directory) / entry.filename
    if dest.exists():
        if sha256_of(dest) == pin:
            return dest
        dest.unlink()

    if not allow_network:
        raise OfflineError(f"{dest} is missing and network access is off; rerun with --allow-network")
    try:
        blob = (downloader or _download)(url)
    except (urllib.error.URLError, OSError) as exc:
        raise OfflineError(f"could not download {url}: {exc}; fetch it manually into {dest.parent}") from None
    digest = hashlib.sha256(blob).hexdigest()
    if digest != pin:
        raise ChecksumError(f"checksum mismatch for {name}: got {digest}, expected {pin}")
    dest.parent.mkdir(parents=True, exist_ok=True)
    tmp = dest.with_name(dest.name + ".part")
    tmp.write_bytes(blob)
    os.replace(tmp, dest)
    return dest


def load_labeled(path):
    """(X, y) from an ODDS-style .mat, an .npz with X/y arrays, or a CSV with a y/label column."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".npz":
        with np.load(path, allow_pickle=False) as data:
            return np.asarray(data["X"], float), np.asarray(data["y"]).ravel().astype(int)
    if suffix == ".mat":
        from scipy.io import loadmat

        data = loadmat(path)
        return np.asarray(data["X"], float), np.asarray(data["y"]).ravel().astype(int)
    for col in ("y", "label"):
        try:
            x, y, _ = read_table(path, label_col=col)
            return x, y.astype(int)
        except InputError:
            continue
    raise InputError(f"{path}: no 'y' or 'label' column")
